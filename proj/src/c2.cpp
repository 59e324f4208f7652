#include "c2kit/c2.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <regex>
#include <set>

#include "c2kit/util.hpp"

namespace c2kit {

std::string_view to_string(SeedSource s) {
    switch (s) {
        case SeedSource::ASQA: return "ASQA";
        case SeedSource::Longform: return "Longform";
        case SeedSource::ExpertQA: return "ExpertQA";
    }
    return "ASQA";
}

SeedSource seed_source_from_string(std::string_view s) {
    const auto lower = to_lower(s);
    if (lower == "asqa") return SeedSource::ASQA;
    if (lower == "longform") return SeedSource::Longform;
    if (lower == "expertqa") return SeedSource::ExpertQA;
    throw std::invalid_argument("unknown seed source '" + std::string(s) + "'");
}

std::string_view to_string(Split s) {
    return s == Split::Train ? "train" : "test";
}

Split split_from_string(std::string_view s) {
    const auto lower = to_lower(s);
    if (lower == "train") return Split::Train;
    if (lower == "test") return Split::Test;
    throw std::invalid_argument("unknown split '" + std::string(s) + "'");
}

const std::vector<std::string>& default_noise_phrases() {
    static const std::vector<std::string> phrases = {
        "does not provide enough information",
        "not enough information to",
        "as an ai language model",
        "i'm sorry, but",
        "cannot be answered",
    };
    return phrases;
}

std::optional<std::string> clean_seed_text(std::string_view text, const std::vector<std::string>& noise_phrases) {
    // Trailing format instructions such as "Respond in 3 sentences." or
    // "Answer in 2-3 paragraphs."
    static const std::regex format_suffix(
        R"((\s*(Respond|Answer|Reply|Write|Explain)( briefly)? (in|using|with) (about |at most |no more than )?[0-9]+(\s*-\s*[0-9]+)? (sentences?|paragraphs?|words?|bullet points?)\.?)+\s*$)",
        std::regex::icase);
    std::string cleaned = std::regex_replace(std::string(text), format_suffix, "");
    cleaned = trim_copy(cleaned);
    if (cleaned.empty()) return std::nullopt;
    const auto lower = to_lower(cleaned);
    for (const auto& phrase : noise_phrases) {
        if (lower.find(to_lower(phrase)) != std::string::npos) return std::nullopt;
    }
    return cleaned;
}

std::vector<SeedQuery> read_seed_queries(std::string_view content, SeedSource default_source, Split default_split,
                                         bool clean, std::vector<std::string>* rejects) {
    std::vector<SeedQuery> out;
    const auto lines = split_lines(content);
    const auto first = std::find_if(lines.begin(), lines.end(), [](const auto& l) { return !trim_copy(l).empty(); });
    const bool jsonl = first != lines.end() && trim_copy(*first).front() == '{';

    const auto reject = [&](std::size_t line_no, const std::string& why) {
        if (rejects) rejects->push_back("line " + std::to_string(line_no) + ": " + why);
    };

    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string line = trim_copy(lines[i]);
        if (line.empty()) continue;
        SeedQuery q;
        q.source = default_source;
        q.split = default_split;
        if (jsonl) {
            const auto j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.is_object() || !j.contains("text") || !j["text"].is_string()) {
                reject(i + 1, "not a JSON object with a \"text\" string");
                continue;
            }
            try {
                q.text = j["text"].get<std::string>();
                if (j.contains("source")) q.source = seed_source_from_string(j["source"].get<std::string>());
                if (j.contains("split")) q.split = split_from_string(j["split"].get<std::string>());
                if (j.contains("id")) q.id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
            } catch (const std::exception& e) {
                reject(i + 1, e.what());
                continue;
            }
        } else {
            q.text = line;
        }
        q.text = trim_copy(q.text);
        if (q.text.find('\n') != std::string::npos) q.text.erase(std::remove(q.text.begin(), q.text.end(), '\n'), q.text.end());
        if (clean) {
            auto cleaned = clean_seed_text(q.text, default_noise_phrases());
            if (!cleaned) {
                reject(i + 1, "filtered as noise");
                continue;
            }
            q.text = *cleaned;
        }
        if (q.text.empty()) {
            reject(i + 1, "empty query");
            continue;
        }
        if (q.id.empty()) q.id = "q" + hex64(fnv1a(std::string(to_string(q.source)) + "\t" + q.text)).substr(0, 12);
        out.push_back(std::move(q));
    }
    return out;
}

std::string extract_tree_listing(std::string_view raw) {
    std::string out;
    for (const auto& line : split_lines(raw)) {
        const auto t = trim_copy(line);
        if (t.empty() || !std::isdigit(static_cast<unsigned char>(t[0]))) continue;
        out += line;
        out += '\n';
    }
    return out;
}

QTree decompose_tree(const std::string& base_query, const std::string& tree_id, LlmGateway& llm) {
    CompletionRequest req;
    req.template_name = "tree_decompose";
    req.slots = {{"base_query", base_query}};
    const auto result = llm.complete(req, [&](const std::string& text) -> std::optional<std::string> {
        try {
            parse_tree(extract_tree_listing(text), base_query, tree_id);
            return std::nullopt;
        } catch (const TreeError& e) {
            return std::string(e.what());
        }
    });
    return parse_tree(extract_tree_listing(result.text), base_query, tree_id);
}

std::string compose_c2(std::string_view base, std::string_view cov) {
    const auto b = trim_copy(base);
    const auto c = trim_copy(cov);
    if (b.empty() || c.empty()) throw std::invalid_argument("base and coverage queries must be non-empty");
    return b + " " + c;
}

std::string C2Query::text() const {
    return compose_c2(base_query, coverage_query);
}

nlohmann::json to_json(const C2Query& q) {
    return {{"id", q.id},
            {"source", q.source},
            {"base_query", q.base_query},
            {"coverage_query", q.coverage_query},
            {"background_path", q.background.str()},
            {"intent", to_string(q.intent)},
            {"tree_id", q.tree_id}};
}

C2Query c2_from_json(const nlohmann::json& j) {
    C2Query q;
    q.id = j.at("id").get<std::string>();
    q.source = j.value("source", "");
    q.base_query = j.at("base_query").get<std::string>();
    q.coverage_query = j.at("coverage_query").get<std::string>();
    const auto bg = j.at("background_path").get<std::string>();
    auto path = TreePath::parse(bg);
    if (!path) throw std::invalid_argument("bad background path '" + bg + "'");
    q.background = *path;
    q.intent = intent_from_string(j.at("intent").get<std::string>());
    q.tree_id = j.at("tree_id").get<std::string>();
    if (trim_copy(q.base_query).empty() || trim_copy(q.coverage_query).empty()) {
        throw std::invalid_argument("C2 query " + q.id + " has an empty component");
    }
    return q;
}

TreePath select_background(const QTree&, std::uint64_t seed) {
    Rng rng(seed);
    return all_paths()[rng.index(kTreeSize)];
}

std::vector<IntentOp> assign_intents(std::size_t n, double inclusion_ratio, std::uint64_t seed) {
    if (inclusion_ratio < 0.0 || inclusion_ratio > 1.0) throw std::invalid_argument("inclusion ratio must be in [0, 1]");
    const auto inclusions = static_cast<std::size_t>(std::llround(static_cast<double>(n) * inclusion_ratio));
    std::vector<IntentOp> out(n, IntentOp::Exclusion);
    std::fill_n(out.begin(), inclusions, IntentOp::Inclusion);
    Rng rng(seed);
    for (std::size_t i = n; i > 1; --i) std::swap(out[i - 1], out[rng.index(i)]);
    return out;
}

namespace {

std::size_t sentence_count(std::string_view text) {
    std::size_t count = 0;
    bool in_sentence = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c == '.' || c == '!' || c == '?') {
            const bool boundary = i + 1 == text.size() || std::isspace(static_cast<unsigned char>(text[i + 1]));
            if (boundary && in_sentence) {
                ++count;
                in_sentence = false;
            }
        } else if (!std::isspace(static_cast<unsigned char>(c))) {
            in_sentence = true;
        }
    }
    return count + (in_sentence ? 1 : 0);
}

bool words_match(const std::string& a, const std::string& b) {
    if (a == b) return true;
    // crude stemming: shared 5-letter prefix ("audience" / "audiences")
    return a.size() >= 5 && b.size() >= 5 && a.compare(0, 5, b, 0, 5) == 0;
}

}  // namespace

CoverageLint lint_coverage(std::string_view coverage_query, std::string_view background_text,
                           std::string_view base_query) {
    CoverageLint lint;
    const auto sentences = sentence_count(coverage_query);
    if (sentences < 1 || sentences > 2) {
        lint.warnings.push_back("coverage query has " + std::to_string(sentences) + " sentences (expected 1-2)");
    }

    const auto base_words = content_words(base_query);
    std::vector<std::string> topic;
    for (auto& w : content_words(background_text)) {
        const bool in_base = std::any_of(base_words.begin(), base_words.end(), [&](const auto& b) { return words_match(w, b); });
        if (!in_base) topic.push_back(std::move(w));
    }
    if (!topic.empty()) {
        const auto cov_words = content_words(coverage_query);
        const bool mentioned = std::any_of(topic.begin(), topic.end(), [&](const auto& t) {
            return std::any_of(cov_words.begin(), cov_words.end(), [&](const auto& c) { return words_match(t, c); });
        });
        if (!mentioned) lint.warnings.push_back("coverage query does not mention the background subtopic");
    }
    return lint;
}

std::vector<std::string> generate_coverage(const QTree& tree, const TreePath& background, IntentOp intent,
                                           LlmGateway& llm) {
    CompletionRequest req;
    req.template_name = "coverage_generate";
    req.mode = CompletionMode::Json;
    req.slots = {{"base_query", tree.base_query()},
                 {"tree", render_tree(tree)},
                 {"background", tree.text(background)},
                 {"intent", intent == IntentOp::Inclusion ? "Inclusion" : "Exclusion"}};

    const auto extract = [](const std::string& text) {
        std::vector<std::string> out;
        const auto j = nlohmann::json::parse(text, nullptr, false);
        if (j.is_discarded()) return out;
        const auto* arr = &j;
        if (j.is_object() && j.contains("coverage_queries")) arr = &j["coverage_queries"];
        if (!arr->is_array()) return out;
        for (const auto& item : *arr) {
            if (item.is_string() && !trim_copy(item.get<std::string>()).empty()) out.push_back(trim_copy(item.get<std::string>()));
        }
        return out;
    };

    const auto result = llm.complete(req, [&](const std::string& text) -> std::optional<std::string> {
        if (extract(text).size() < kCoverageSamples) return "expected 5 coverage queries";
        return std::nullopt;
    });
    auto samples = extract(result.text);
    samples.resize(kCoverageSamples);
    return samples;
}

FinalizeResult finalize_coverage(const std::vector<std::string>& samples, const QTree& tree, const TreePath& background,
                                 IntentOp intent, const std::string& id, const std::string& source, LlmGateway& llm) {
    RejectedC2 rejected;
    const std::string tree_text = render_tree(tree);
    for (std::size_t s = 0; s < samples.size(); ++s) {
        std::vector<std::string> reasons;
        if (trim_copy(samples[s]).empty()) {
            rejected.reasons.push_back({"empty coverage query"});
            continue;
        }
        C2Query query{id, source, tree.base_query(), trim_copy(samples[s]), background, intent, tree.id()};

        CompletionRequest req;
        req.template_name = "candidate_extract";
        req.slots = {{"c2_query", query.text()}, {"tree", tree_text}};
        const auto result = llm.complete(req);

        const auto parsed = parse_candidates(result.text, tree);
        if (parsed.size() < kCandidatesPerQuery) {
            reasons.push_back("only " + std::to_string(parsed.size()) + " candidate outlines found");
        }
        FinalizedC2 accepted{query, s, {}, {}};
        for (std::size_t c = 0; c < parsed.size(); ++c) {
            const auto& cand = parsed[c];
            const std::string slot = "candidate " + std::to_string(c + 1) + ": ";
            if (!cand.json_error.empty()) {
                reasons.push_back(slot + "JsonError: " + cand.json_error);
            } else if (!cand.ok()) {
                std::string v;
                for (auto violation : cand.verdict.violations) v += std::string(v.empty() ? "" : ", ") + std::string(to_string(violation));
                reasons.push_back(slot + v);
            } else {
                accepted.candidates.push_back(*cand.outline);
                accepted.warnings.push_back(cand.warnings);
            }
        }
        if (reasons.empty()) return accepted;
        rejected.reasons.push_back(std::move(reasons));
    }
    return rejected;
}

nlohmann::json candidates_to_json(const FinalizedC2& f) {
    nlohmann::json cands = nlohmann::json::array();
    for (const auto& o : f.candidates) cands.push_back(outline_to_json(o));
    return {{"c2_id", f.query.id}, {"chosen_sample", f.chosen_sample}, {"candidates", cands}};
}

}  // namespace c2kit
