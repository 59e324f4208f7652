#include "c2kit/outline.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <unordered_set>

#include "c2kit/util.hpp"

namespace c2kit {

std::string_view to_string(IntentOp op) {
    return op == IntentOp::Inclusion ? "inclusion" : "exclusion";
}

IntentOp intent_from_string(std::string_view text) {
    const auto lower = to_lower(text);
    if (lower == "inclusion") return IntentOp::Inclusion;
    if (lower == "exclusion") return IntentOp::Exclusion;
    throw std::invalid_argument("unknown intent operation '" + std::string(text) + "'");
}

IntentOp opposite(IntentOp op) {
    return op == IntentOp::Inclusion ? IntentOp::Exclusion : IntentOp::Inclusion;
}

bool Outline::contains(const TreePath& path) const {
    return std::find(paths.begin(), paths.end(), path) != paths.end();
}

std::string_view to_string(Violation v) {
    switch (v) {
        case Violation::WrongSize: return "WrongSize";
        case Violation::Duplicate: return "Duplicate";
        case Violation::Disconnected: return "Disconnected";
        case Violation::UnknownPath: return "UnknownPath";
    }
    return "Unknown";
}

bool OutlineVerdict::has(Violation v) const {
    return std::find(violations.begin(), violations.end(), v) != violations.end();
}

namespace {

std::size_t component_count(std::span<const TreePath> paths) {
    std::vector<TreePath> nodes(paths.begin(), paths.end());
    std::sort(nodes.begin(), nodes.end());
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());

    std::vector<bool> seen(nodes.size(), false);
    std::size_t components = 0;
    for (std::size_t start = 0; start < nodes.size(); ++start) {
        if (seen[start]) continue;
        ++components;
        std::vector<std::size_t> stack{start};
        seen[start] = true;
        while (!stack.empty()) {
            const std::size_t cur = stack.back();
            stack.pop_back();
            for (std::size_t j = 0; j < nodes.size(); ++j) {
                if (!seen[j] && adjacent(nodes[cur], nodes[j])) {
                    seen[j] = true;
                    stack.push_back(j);
                }
            }
        }
    }
    return components;
}

OutlineVerdict verdict_for(std::span<const TreePath> known, std::size_t total, bool unknown) {
    OutlineVerdict verdict;
    if (total != kOutlineSize) verdict.violations.push_back(Violation::WrongSize);

    std::set<TreePath> distinct(known.begin(), known.end());
    if (distinct.size() != known.size()) verdict.violations.push_back(Violation::Duplicate);
    if (!is_connected(known)) verdict.violations.push_back(Violation::Disconnected);
    if (unknown) verdict.violations.push_back(Violation::UnknownPath);
    return verdict;
}

std::uint64_t mask_of(std::span<const TreePath> paths) {
    std::uint64_t mask = 0;
    for (const auto& p : paths) mask |= std::uint64_t{1} << p.dfs_index();
    return mask;
}

}  // namespace

bool is_connected(std::span<const TreePath> paths) {
    return component_count(paths) <= 1;
}

OutlineVerdict validate_outline(std::span<const TreePath> paths) {
    return verdict_for(paths, paths.size(), false);
}

OutlineVerdict validate_outline(std::span<const std::string> paths) {
    std::vector<TreePath> known;
    bool unknown = false;
    for (const auto& s : paths) {
        if (auto p = TreePath::parse(s)) {
            known.push_back(*p);
        } else {
            unknown = true;
        }
    }
    return verdict_for(known, paths.size(), unknown);
}

Outline make_outline(const QTree& tree, std::vector<TreePath> paths) {
    const auto verdict = validate_outline(paths);
    if (!verdict.valid()) {
        std::string why;
        for (auto v : verdict.violations) why += std::string(why.empty() ? "" : ", ") + std::string(to_string(v));
        throw std::invalid_argument("invalid outline: " + why);
    }
    std::sort(paths.begin(), paths.end());
    Outline outline;
    outline.tree_id = tree.id();
    for (const auto& p : paths) outline.texts.push_back(tree.text(p));
    outline.paths = std::move(paths);
    return outline;
}

std::vector<Outline> enumerate_outlines(const QTree& tree) {
    // Each connected vertex set is generated exactly once, rooted at its
    // smallest depth-first index; the extension set only admits vertices with
    // a larger index that are exclusive neighbours of the newest vertex.
    const auto& paths = all_paths();
    std::vector<std::vector<std::size_t>> adj(kTreeSize);
    for (std::size_t i = 0; i < kTreeSize; ++i) {
        for (const auto& n : neighbors(paths[i])) adj[i].push_back(n.dfs_index());
    }

    std::vector<std::vector<std::size_t>> found;
    std::vector<std::size_t> current;

    const std::function<void(std::vector<std::size_t>, std::size_t)> extend =
        [&](std::vector<std::size_t> extension, std::size_t root) {
            if (current.size() == kOutlineSize) {
                found.push_back(current);
                return;
            }
            while (!extension.empty()) {
                const std::size_t w = extension.back();
                extension.pop_back();

                std::vector<std::size_t> next = extension;
                for (std::size_t u : adj[w]) {
                    if (u <= root) continue;
                    if (std::find(current.begin(), current.end(), u) != current.end()) continue;
                    if (std::find(next.begin(), next.end(), u) != next.end()) continue;
                    const bool touches_current = std::any_of(current.begin(), current.end(), [&](std::size_t c) {
                        return std::find(adj[c].begin(), adj[c].end(), u) != adj[c].end();
                    });
                    if (!touches_current) next.push_back(u);
                }
                current.push_back(w);
                extend(std::move(next), root);
                current.pop_back();
            }
        };

    for (std::size_t v = 0; v < kTreeSize; ++v) {
        std::vector<std::size_t> extension;
        for (std::size_t u : adj[v]) {
            if (u > v) extension.push_back(u);
        }
        current = {v};
        extend(std::move(extension), v);
    }

    std::vector<Outline> outlines;
    outlines.reserve(found.size());
    for (const auto& set : found) {
        std::vector<TreePath> ps;
        for (std::size_t idx : set) ps.push_back(paths[idx]);
        outlines.push_back(make_outline(tree, std::move(ps)));
    }
    std::sort(outlines.begin(), outlines.end(),
              [](const Outline& a, const Outline& b) { return a.paths < b.paths; });
    return outlines;
}

TrimResult trim_outline(std::span<const TreePath> paths) {
    std::vector<TreePath> input(paths.begin(), paths.end());
    const std::set<TreePath> distinct(input.begin(), input.end());
    if (input.size() <= kOutlineSize || distinct.size() != input.size()) {
        return {TrimStatus::NotApplicable, std::move(input)};
    }

    // Removal preference: deepest first, then numerically largest path.
    const auto prefer = [](const TreePath& a, const TreePath& b) {
        if (a.depth() != b.depth()) return a.depth() > b.depth();
        return b < a;
    };

    std::unordered_set<std::uint64_t> visited;
    std::vector<TreePath> result;
    const std::function<bool(std::vector<TreePath>)> search = [&](std::vector<TreePath> current) {
        if (current.size() == kOutlineSize) {
            if (!is_connected(current)) return false;
            result = std::move(current);
            return true;
        }
        if (!visited.insert(mask_of(current)).second) return false;

        const std::size_t components = component_count(current);
        std::vector<TreePath> order = current;
        std::sort(order.begin(), order.end(), prefer);
        for (const auto& victim : order) {
            std::vector<TreePath> rest;
            for (const auto& p : current) {
                if (p != victim) rest.push_back(p);
            }
            // A removable node is a leaf of the induced subgraph: dropping it
            // never splits what remains.
            if (component_count(rest) > components) continue;
            if (search(std::move(rest))) return true;
        }
        return false;
    };

    std::vector<TreePath> start = input;
    std::sort(start.begin(), start.end());
    if (!search(std::move(start))) return {TrimStatus::Untrimmable, std::move(input)};
    std::sort(result.begin(), result.end());
    return {TrimStatus::Trimmed, std::move(result)};
}

std::vector<TreePath> random_walk_from(const TreePath& start, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<TreePath> selected{start};
    while (selected.size() < kOutlineSize) {
        std::set<TreePath> frontier;
        for (const auto& s : selected) {
            for (const auto& n : neighbors(s)) frontier.insert(n);
        }
        for (const auto& s : selected) frontier.erase(s);
        auto it = frontier.begin();
        std::advance(it, static_cast<std::ptrdiff_t>(rng.index(frontier.size())));
        selected.push_back(*it);
    }
    return selected;
}

Outline random_outline(const QTree& tree, std::uint64_t seed) {
    Rng rng(seed);
    const TreePath start = all_paths()[rng.index(kTreeSize)];
    return make_outline(tree, random_walk_from(start, rng.next()));
}

bool satisfies_negative_property(const Outline& outline, const TreePath& background, IntentOp intent) {
    // A negative has the opposite coverage of the positive's intent.
    return intent == IntentOp::Inclusion ? !outline.contains(background) : outline.contains(background);
}

Outline synthetic_negative(const QTree& tree, const Outline& positive, const TreePath& background, IntentOp intent,
                           std::uint64_t seed) {
    Rng rng(seed);
    std::vector<TreePath> starts;
    for (const auto& p : all_paths()) {
        if (p != background) starts.push_back(p);
    }
    for (int attempt = 0; attempt < kSyntheticNegativeBudget; ++attempt) {
        const TreePath start = intent == IntentOp::Inclusion ? starts[rng.index(starts.size())] : background;
        Outline candidate = make_outline(tree, random_walk_from(start, rng.next()));
        if (!satisfies_negative_property(candidate, background, intent)) continue;
        if (candidate.paths == positive.paths) continue;
        return candidate;
    }
    throw UnsatisfiableError("no synthetic negative found for background " + background.str() + " after " +
                             std::to_string(kSyntheticNegativeBudget) + " walks");
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
    std::vector<std::size_t> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t up = row[j];
            row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
            diag = up;
        }
    }
    return row[b.size()];
}

namespace {

/// Raw text of each top-level element of the array stored under
/// "candidates", found by bracket matching so that one malformed element
/// cannot hide the others. Empty when no such array is present.
std::vector<std::string> split_candidate_array(std::string_view raw) {
    std::vector<std::string> elements;
    const auto key = raw.find("\"candidates\"");
    if (key == std::string_view::npos) return elements;
    const auto open = raw.find('[', key);
    if (open == std::string_view::npos) return elements;

    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    std::size_t element_start = open + 1;
    for (std::size_t i = open + 1; i < raw.size(); ++i) {
        const char c = raw[i];
        if (in_string) {
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '{' || c == '[') {
            ++depth;
        } else if (c == '}' || c == ']') {
            if (depth == 0) {
                if (c == ']') {
                    elements.emplace_back(raw.substr(element_start, i - element_start));
                    break;
                }
                continue;
            }
            --depth;
        } else if (c == ',' && depth == 0) {
            elements.emplace_back(raw.substr(element_start, i - element_start));
            element_start = i + 1;
        }
    }
    // Unterminated array: keep what was collected plus the tail.
    if (depth != 0 || in_string) elements.emplace_back(raw.substr(element_start));
    elements.erase(std::remove_if(elements.begin(), elements.end(),
                                  [](const std::string& e) { return trim_copy(e).empty(); }),
                   elements.end());
    return elements;
}

CandidateParse parse_one_candidate(const std::string& element, const QTree& tree) {
    CandidateParse out;
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(element);
    } catch (const nlohmann::json::parse_error& e) {
        out.json_error = e.what();
        return out;
    }
    if (!j.is_object() || !j.contains("queries") || !j["queries"].is_array()) {
        out.json_error = "candidate is not an object with a \"queries\" array";
        return out;
    }

    std::vector<std::string> emitted_texts;
    for (const auto& q : j["queries"]) {
        if (!q.is_object() || !q.contains("path") || !q["path"].is_string()) {
            out.json_error = "query entry without a string \"path\"";
            return out;
        }
        out.raw_paths.push_back(q["path"].get<std::string>());
        emitted_texts.push_back(q.contains("text") && q["text"].is_string() ? q["text"].get<std::string>() : "");
    }

    out.verdict = validate_outline(std::span<const std::string>(out.raw_paths));
    std::vector<TreePath> paths;
    for (const auto& s : out.raw_paths) {
        if (auto p = TreePath::parse(s)) paths.push_back(*p);
    }

    const bool oversized_only = out.verdict.has(Violation::WrongSize) && out.raw_paths.size() > kOutlineSize &&
                                !out.verdict.has(Violation::Duplicate) && !out.verdict.has(Violation::UnknownPath);
    if (oversized_only) {
        auto trim = trim_outline(paths);
        if (trim.status == TrimStatus::Trimmed) {
            paths = std::move(trim.paths);
            out.trimmed = true;
            out.verdict = validate_outline(paths);
        }
    }
    if (!out.verdict.valid()) return out;

    // The tree is the source of truth for texts; large disagreements are
    // surfaced as warnings.
    for (std::size_t i = 0; i < out.raw_paths.size(); ++i) {
        const auto p = TreePath::parse(out.raw_paths[i]);
        if (!p || std::find(paths.begin(), paths.end(), *p) == paths.end()) continue;
        const auto emitted = normalize_text(emitted_texts[i]);
        const auto actual = normalize_text(tree.text(*p));
        if (emitted.empty()) continue;
        const double ratio = static_cast<double>(edit_distance(emitted, actual)) /
                             static_cast<double>(std::max<std::size_t>(1, std::max(emitted.size(), actual.size())));
        if (ratio > 0.2) out.warnings.push_back("text for " + p->str() + " differs from tree node");
    }
    out.outline = make_outline(tree, std::move(paths));
    return out;
}

}  // namespace

std::vector<CandidateParse> parse_candidates(std::string_view raw_llm_output, const QTree& tree) {
    std::vector<CandidateParse> out;
    for (const auto& element : split_candidate_array(raw_llm_output)) {
        if (out.size() == kCandidatesPerQuery) break;
        out.push_back(parse_one_candidate(element, tree));
    }
    return out;
}

nlohmann::json outline_to_json(const Outline& outline) {
    nlohmann::json paths = nlohmann::json::array();
    for (const auto& p : outline.paths) paths.push_back(p.str());
    return {{"tree_id", outline.tree_id}, {"paths", paths}, {"texts", outline.texts}};
}

Outline outline_from_json(const nlohmann::json& j, const QTree& tree) {
    std::vector<TreePath> paths;
    for (const auto& s : j.at("paths")) {
        auto p = TreePath::parse(s.get<std::string>());
        if (!p) throw std::invalid_argument("bad outline path '" + s.get<std::string>() + "'");
        paths.push_back(*p);
    }
    return make_outline(tree, std::move(paths));
}

std::string render_outline(const Outline& outline) {
    std::string out;
    for (std::size_t i = 0; i < outline.paths.size(); ++i) {
        out += render_line(outline.paths[i], outline.texts[i]);
        out += '\n';
    }
    return out;
}

}  // namespace c2kit
