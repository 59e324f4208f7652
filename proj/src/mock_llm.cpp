#include "c2kit/mock_llm.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <optional>

#include "c2kit/outline.hpp"
#include "c2kit/qtree.hpp"
#include "c2kit/util.hpp"

namespace c2kit {

namespace {

constexpr std::array<const char*, 12> kAspects = {
    "history",   "design",   "applications", "economics",  "culture",       "science",
    "politics",  "geography", "technology",  "reception",  "controversies", "legacy"};
constexpr std::array<const char*, 12> kFacets = {
    "origins", "key figures", "turning points", "institutions", "methods",    "materials",
    "regional differences", "public debate", "funding", "regulation", "measurement", "criticism"};
constexpr std::array<const char*, 12> kDetails = {
    "case study", "statistic", "primary source", "anecdote",  "comparison", "timeline event",
    "expert opinion", "court ruling", "experiment", "survey", "map", "photograph"};

template <std::size_t N>
std::vector<std::string> pick3(const std::array<const char*, N>& pool, Rng& rng) {
    std::vector<std::string> all(pool.begin(), pool.end());
    for (std::size_t i = 0; i < 3; ++i) std::swap(all[i], all[i + rng.index(all.size() - i)]);
    all.resize(3);
    return all;
}

std::string topic_of(const std::string& base_query) {
    const auto words = content_words(base_query);
    if (words.empty()) return "the subject";
    std::string out;
    for (const auto& w : words) out += (out.empty() ? "" : " ") + w;
    return out;
}

std::string strip_question(std::string text) {
    text = trim_copy(text);
    while (!text.empty() && (text.back() == '?' || text.back() == '.')) text.pop_back();
    if (!text.empty()) text[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(text[0])));
    return text;
}

std::string respond_tree(const CompletionRequest& req, std::uint64_t h) {
    const std::string topic = topic_of(req.slots.at("base_query"));
    Rng rng(h);
    const auto aspects = pick3(kAspects, rng);
    std::string out = "Here is the tree.\n```\n";
    for (int a = 1; a <= 3; ++a) {
        const auto& aspect = aspects[a - 1];
        out += render_line(TreePath({a}), "What is the " + aspect + " of " + topic + "?") + "\n";
        const auto facets = pick3(kFacets, rng);
        for (int b = 1; b <= 3; ++b) {
            const auto& facet = facets[b - 1];
            out += render_line(TreePath({a, b}), "What " + facet + " shaped the " + aspect + " of " + topic + "?") + "\n";
            const auto details = pick3(kDetails, rng);
            for (int c = 1; c <= 3; ++c) {
                out += render_line(TreePath({a, b, c}), "Which " + details[c - 1] + " illustrates the " + facet +
                                                            " within the " + aspect + " of " + topic + "?") +
                       "\n";
            }
        }
    }
    return out + "```\n";
}

std::string respond_coverage(const CompletionRequest& req) {
    const std::string bg = strip_question(req.slots.at("background"));
    const bool inclusion = to_lower(req.slots.at("intent")) == "inclusion";
    std::vector<std::string> qs;
    if (inclusion) {
        qs = {"Please make sure the answer covers \"" + bg + "\".",
              "I would like details on \"" + bg + "\".",
              "Include a discussion of \"" + bg + "\" in the answer.",
              "Be sure to address \"" + bg + "\" in some depth.",
              "Cover \"" + bg + "\" as part of the answer."};
    } else {
        qs = {"Please do not discuss \"" + bg + "\", since I already know it.",
              "Leave out \"" + bg + "\" and focus on other aspects.",
              "Avoid \"" + bg + "\" entirely.",
              "Skip \"" + bg + "\"; I am familiar with it.",
              "Answer without going into \"" + bg + "\"."};
    }
    return nlohmann::json{{"coverage_queries", qs}}.dump();
}

bool is_exclusion(const std::string& c2_text) {
    const auto lower = to_lower(c2_text);
    for (const char* marker : {"do not", "leave out", "avoid", "skip", "without"}) {
        if (lower.find(marker) != std::string::npos) return true;
    }
    return false;
}

/// The quoted background subquery inside a mock coverage query, if any.
std::string quoted_background(const std::string& c2_text) {
    const auto open = c2_text.find('"');
    if (open == std::string::npos) return {};
    const auto close = c2_text.find('"', open + 1);
    if (close == std::string::npos) return {};
    return c2_text.substr(open + 1, close - open - 1);
}

std::string respond_candidates(const CompletionRequest& req, std::uint64_t h) {
    const std::string& c2_text = req.slots.at("c2_query");
    const QTree tree = parse_tree(req.slots.at("tree"), "mock");
    const std::string bg = quoted_background(c2_text);
    std::optional<TreePath> background;
    for (const auto& node : tree.nodes()) {
        if (!bg.empty() && strip_question(node.text) == bg) background = node.path;
    }
    const bool exclusion = is_exclusion(c2_text);

    std::vector<Outline> good, bad;
    for (auto& o : enumerate_outlines(tree)) {
        const bool has_bg = background && o.contains(*background);
        (has_bg != exclusion ? good : bad).push_back(std::move(o));
    }
    if (good.empty()) good = bad;
    if (bad.empty()) bad = good;

    Rng rng(h);
    std::vector<std::vector<std::pair<TreePath, std::string>>> slots;
    for (int c = 0; c < 3; ++c) {
        // Roughly one candidate in four ignores the instruction.
        const auto& pool = rng.index(4) == 0 ? bad : good;
        const auto& o = pool[rng.index(pool.size())];
        std::vector<std::pair<TreePath, std::string>> q;
        for (std::size_t i = 0; i < o.paths.size(); ++i) q.emplace_back(o.paths[i], o.texts[i]);
        slots.push_back(std::move(q));
    }
    if (h % 11 == 0) {
        // A cross-branch pick that cannot be validated or trimmed.
        slots[1] = {{TreePath({1, 1, 1}), tree.text(TreePath({1, 1, 1}))},
                    {TreePath({2, 2, 2}), tree.text(TreePath({2, 2, 2}))},
                    {TreePath({3, 3, 3}), tree.text(TreePath({3, 3, 3}))},
                    {TreePath({1, 3, 2}), tree.text(TreePath({1, 3, 2}))}};
    }

    nlohmann::json cands = nlohmann::json::array();
    for (const auto& q : slots) {
        nlohmann::json queries = nlohmann::json::array();
        for (const auto& [p, t] : q) queries.push_back({{"path", p.str()}, {"text", t}});
        cands.push_back({{"queries", queries}});
    }
    return nlohmann::json{{"candidates", cands}}.dump(2);
}

std::string respond_judge(const CompletionRequest& req, std::uint64_t h) {
    const std::string& c2_text = req.slots.at("c2_query");
    const std::string bg = quoted_background(c2_text);
    bool has_bg = false;
    for (const auto& line : split_lines(req.slots.at("outline"))) {
        const auto t = trim_copy(line);
        const auto space = t.find(' ');
        if (space != std::string::npos && !bg.empty() && strip_question(t.substr(space + 1)) == bg) has_bg = true;
    }
    const bool adherent = has_bg != is_exclusion(c2_text);
    const int score = static_cast<int>(h % 3) + (adherent ? 3 : 1);
    std::string rationale = adherent ? "The outline follows the requested coverage" : "The outline does not respect the requested coverage";
    rationale += bg.empty() ? "." : " regarding \"" + bg + "\".";
    return "Rationale: " + rationale + "\nScore: " + std::to_string(score);
}

std::string respond_rag(const CompletionRequest& req) {
    std::string out = "## Answer\n\n";
    for (const auto& line : split_lines(req.slots.at("evidence"))) {
        const auto t = trim_copy(line);
        if (t.size() < 3 || t[0] != '[') continue;
        const auto close = t.find(']');
        if (close == std::string::npos) continue;
        std::string body = trim_copy(t.substr(close + 1));
        if (body.size() > 120) body = body.substr(0, 120) + "...";
        out += "- " + body + " " + t.substr(0, close + 1) + "\n";
    }
    return out;
}

}  // namespace

MockProvider::Responder synthetic_responder() {
    return [](const CompletionRequest& req, const std::string&) -> std::string {
        const std::uint64_t h = fnv1a(request_hash(req));
        if (req.template_name == "tree_decompose") return respond_tree(req, h);
        if (req.template_name == "coverage_generate") return respond_coverage(req);
        if (req.template_name == "candidate_extract") return respond_candidates(req, h);
        if (req.template_name == "judge_score") return respond_judge(req, h);
        if (req.template_name == "rag_respond") return respond_rag(req);
        throw GatewayError(GatewayError::Kind::Provider, "mock has no response for template " + req.template_name);
    };
}

}  // namespace c2kit
