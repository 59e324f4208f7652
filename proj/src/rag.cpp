#include "c2kit/rag.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "c2kit/util.hpp"

namespace c2kit {

std::string_view to_string(RagMode m) {
    return m == RagMode::Vanilla ? "vanilla" : "outline";
}

RagMode rag_mode_from_string(std::string_view s) {
    const auto lower = to_lower(s);
    if (lower == "vanilla") return RagMode::Vanilla;
    if (lower == "outline") return RagMode::Outline;
    throw std::invalid_argument("unknown RAG mode '" + std::string(s) + "'");
}

RagPlan plan_searches(std::string_view c2_text, const Outline* outline) {
    return plan_searches(c2_text, outline ? RagMode::Outline : RagMode::Vanilla, outline);
}

RagPlan plan_searches(std::string_view c2_text, RagMode mode, const Outline* outline) {
    RagPlan plan;
    plan.mode = mode;
    if (mode == RagMode::Vanilla) {
        if (outline) throw std::invalid_argument("vanilla RAG takes no outline");
        plan.queries = {trim_copy(c2_text)};
        plan.per_query_k = kVanillaTopK;
        return plan;
    }
    if (!outline) throw std::invalid_argument("outline RAG requires an outline");
    if (outline->texts.size() != kOutlineSize) throw std::invalid_argument("outline must have 4 subqueries");
    plan.queries = outline->texts;
    plan.queries.push_back(trim_copy(c2_text));
    plan.per_query_k = kOutlineTopK;
    return plan;
}

std::unique_ptr<FixtureSearchClient> FixtureSearchClient::from_path(const std::string& path) {
    std::map<std::string, std::vector<SearchHit>> results;
    const auto load = [&](const std::filesystem::path& file) {
        std::ifstream in(file);
        if (!in) throw std::runtime_error("cannot open search fixture " + file.string());
        const auto j = nlohmann::json::parse(in);
        for (const auto& [query, hits] : j.items()) {
            auto& list = results[query];
            for (const auto& h : hits) {
                list.push_back({h.value("url", ""), h.value("title", ""), h.value("body", "")});
            }
        }
    };
    if (std::filesystem::is_directory(path)) {
        std::vector<std::filesystem::path> files;
        for (const auto& entry : std::filesystem::directory_iterator(path)) {
            if (entry.path().extension() == ".json") files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) load(f);
    } else {
        load(path);
    }
    return std::make_unique<FixtureSearchClient>(std::move(results));
}

std::vector<SearchHit> FixtureSearchClient::search(const std::string& query, std::size_t k) {
    auto it = results_.find(query);
    if (it == results_.end()) return {};
    std::vector<SearchHit> hits(it->second.begin(), it->second.begin() + std::min(k, it->second.size()));
    return hits;
}

std::vector<SearchHit> MockSearchClient::search(const std::string& query, std::size_t k) {
    std::vector<SearchHit> hits;
    const auto words = content_words(query);
    const std::string slug = hex64(fnv1a(query)).substr(0, 10);
    for (std::size_t i = 0; i < std::min(k, hits_); ++i) {
        SearchHit h;
        h.url = "https://example.org/" + slug + "/" + std::to_string(i + 1);
        h.title = "Result " + std::to_string(i + 1) + " for " + query;
        std::string topic;
        for (std::size_t w = 0; w < words.size(); ++w) {
            if ((w + i) % 3 != 2) topic += (topic.empty() ? "" : " ") + words[w];
        }
        h.body = "Background material on " + topic + ".\n\nA passage discussing " + query +
                 " in detail, with notes on " + topic + ".\n\nUnrelated navigation text and site footer.";
        hits.push_back(std::move(h));
    }
    return hits;
}

ExecutionResult execute_plan(const RagPlan& plan, SearchClient& search) {
    ExecutionResult out;
    std::set<std::string> seen_urls;
    for (const auto& query : plan.queries) {
        std::vector<SearchHit> hits;
        try {
            hits = search.search(query, plan.per_query_k);
        } catch (const std::exception& e) {
            out.errors.push_back(query + ": " + e.what());
            out.shortfalls.push_back({query, plan.per_query_k, 0});
            continue;
        }
        std::size_t kept = 0;
        for (std::size_t i = 0; i < hits.size() && i < plan.per_query_k; ++i) {
            if (!seen_urls.insert(hits[i].url).second) {
                ++out.duplicates_dropped;
                continue;
            }
            out.docs.push_back({query, i + 1, hits[i].url, hits[i].title, hits[i].body});
            ++kept;
        }
        if (kept < plan.per_query_k) out.shortfalls.push_back({query, plan.per_query_k, kept});
    }
    return out;
}

std::vector<std::string> split_passages(std::string_view body) {
    static constexpr std::size_t kWindow = 512;
    static constexpr std::size_t kOverlap = 128;

    std::vector<std::string> paragraphs;
    std::string current;
    for (const auto& line : split_lines(body)) {
        if (trim_copy(line).empty()) {
            if (!trim_copy(current).empty()) paragraphs.push_back(trim_copy(current));
            current.clear();
            continue;
        }
        if (!current.empty()) current += '\n';
        current += line;
    }
    if (!trim_copy(current).empty()) paragraphs.push_back(trim_copy(current));
    if (paragraphs.size() != 1 || paragraphs[0].size() <= kWindow) return paragraphs;

    // Unstructured body: sliding windows.
    const std::string& text = paragraphs[0];
    std::vector<std::string> windows;
    for (std::size_t start = 0; start < text.size(); start += kWindow - kOverlap) {
        windows.push_back(text.substr(start, kWindow));
        if (start + kWindow >= text.size()) break;
    }
    return windows;
}

double LexicalScorer::score(std::string_view query, std::string_view passage) const {
    const auto q = content_words(query);
    const auto p = content_words(passage);
    const std::set<std::string> qs(q.begin(), q.end());
    const std::set<std::string> ps(p.begin(), p.end());
    if (qs.empty() || ps.empty()) return 0.0;
    std::size_t inter = 0;
    for (const auto& w : qs) inter += ps.count(w);
    const std::size_t uni = qs.size() + ps.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

EvidenceSelection select_evidence(const std::vector<SearchDoc>& docs, const AnswerabilityScorer& scorer) {
    EvidenceSelection out;
    for (std::size_t d = 0; d < docs.size(); ++d) {
        const auto passages = split_passages(docs[d].body);
        if (passages.empty()) {
            out.warnings.push_back("document " + docs[d].url + " has no text; skipped");
            continue;
        }
        std::size_t best = 0;
        double best_score = -1.0;
        for (std::size_t i = 0; i < passages.size(); ++i) {
            const double s = scorer.score(docs[d].query_used, passages[i]);
            if (s > best_score) {
                best_score = s;
                best = i;
            }
        }
        out.passages.push_back({d, docs[d].url, passages[best], best_score, docs[d].query_used});
    }
    return out;
}

std::string render_outline_draft(const Outline* outline) {
    if (!outline) return "No content draft is provided.";
    std::string out = "Content draft (cover these subqueries in order):\n";
    for (std::size_t i = 0; i < outline->texts.size(); ++i) {
        out += "- " + outline->texts[i];
        if (i + 1 < outline->texts.size()) out += '\n';
    }
    return out;
}

std::string render_evidence(const std::vector<EvidencePassage>& evidence) {
    std::string out;
    for (std::size_t i = 0; i < evidence.size(); ++i) {
        if (i) out += "\n\n";
        out += "[" + std::to_string(i + 1) + "] " + evidence[i].passage;
    }
    return out;
}

CompletionRequest response_request(std::string_view c2_text, const Outline* outline,
                                   const std::vector<EvidencePassage>& evidence) {
    CompletionRequest req;
    req.template_name = "rag_respond";
    req.temperature = 1.0;
    req.slots = {{"c2_query", trim_copy(c2_text)},
                 {"outline", render_outline_draft(outline)},
                 {"evidence", render_evidence(evidence)}};
    return req;
}

std::string generate_response(std::string_view c2_text, const Outline* outline,
                              const std::vector<EvidencePassage>& evidence, LlmGateway& llm) {
    if (evidence.empty()) throw std::invalid_argument("generate_response needs at least one evidence passage");
    return llm.complete(response_request(c2_text, outline, evidence)).text;
}

nlohmann::json to_json(const RagRun& run) {
    nlohmann::json urls = nlohmann::json::array();
    for (const auto& d : run.execution.docs) urls.push_back(d.url);
    nlohmann::json passages = nlohmann::json::array();
    for (const auto& p : run.evidence.passages) {
        passages.push_back({{"url", p.url}, {"query", p.paired_query}, {"answerability", p.answerability}, {"passage", p.passage}});
    }
    nlohmann::json shortfalls = nlohmann::json::array();
    for (const auto& s : run.execution.shortfalls) {
        shortfalls.push_back({{"query", s.query}, {"requested", s.requested}, {"received", s.received}});
    }
    return {{"c2_id", run.c2_id},
            {"mode", to_string(run.plan.mode)},
            {"queries", run.plan.queries},
            {"per_query_k", run.plan.per_query_k},
            {"doc_urls", urls},
            {"passages", passages},
            {"shortfalls", shortfalls},
            {"search_errors", run.execution.errors},
            {"response_markdown", run.response_markdown}};
}

RagRun run_rag(const C2Query& c2, RagMode mode, const Outline* outline, SearchClient& search,
               const AnswerabilityScorer& scorer, LlmGateway& llm) {
    RagRun run;
    run.c2_id = c2.id;
    const std::string text = c2.text();
    run.plan = plan_searches(text, mode, mode == RagMode::Outline ? outline : nullptr);
    run.execution = execute_plan(run.plan, search);
    run.evidence = select_evidence(run.execution.docs, scorer);
    if (!run.evidence.passages.empty()) {
        run.response_markdown = generate_response(text, mode == RagMode::Outline ? outline : nullptr,
                                                  run.evidence.passages, llm);
    }
    return run;
}

}  // namespace c2kit
