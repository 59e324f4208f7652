#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "c2kit/c2.hpp"
#include "c2kit/llm_gateway.hpp"
#include "c2kit/outline.hpp"

namespace c2kit {

enum class RagMode { Vanilla, Outline };
std::string_view to_string(RagMode m);
RagMode rag_mode_from_string(std::string_view s);

inline constexpr std::size_t kDocumentBudget = 10;
inline constexpr std::size_t kVanillaTopK = 10;
inline constexpr std::size_t kOutlineTopK = 2;

struct RagPlan {
    RagMode mode = RagMode::Vanilla;
    std::vector<std::string> queries;
    std::size_t per_query_k = kVanillaTopK;

    std::size_t budget() const noexcept { return queries.size() * per_query_k; }
};

/// Vanilla: the C2 string alone, top-10. Outline: the 4 outline subqueries in
/// canonical order followed by the C2 string, top-2 each.
RagPlan plan_searches(std::string_view c2_text, const Outline* outline);
RagPlan plan_searches(std::string_view c2_text, RagMode mode, const Outline* outline);

struct SearchHit {
    std::string url;
    std::string title;
    std::string body;
};

class SearchError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SearchClient {
public:
    virtual ~SearchClient() = default;
    /// Ranked hits, best first; at most k. Throws SearchError.
    virtual std::vector<SearchHit> search(const std::string& query, std::size_t k) = 0;
};

/// Canned results from a JSON object {"query": [{"url","title","body"}, ...]},
/// or a directory of such files.
class FixtureSearchClient : public SearchClient {
public:
    explicit FixtureSearchClient(std::map<std::string, std::vector<SearchHit>> results)
        : results_(std::move(results)) {}
    static std::unique_ptr<FixtureSearchClient> from_path(const std::string& path);

    std::vector<SearchHit> search(const std::string& query, std::size_t k) override;

private:
    std::map<std::string, std::vector<SearchHit>> results_;
};

/// Deterministic synthetic results derived from the query text.
class MockSearchClient : public SearchClient {
public:
    explicit MockSearchClient(std::size_t hits_per_query = 10) : hits_(hits_per_query) {}
    std::vector<SearchHit> search(const std::string& query, std::size_t k) override;

private:
    std::size_t hits_;
};

/// Web search over a JSON API (Brave-style `web.results[]`), key from
/// SEARCH_API_KEY and endpoint from SEARCH_BASE_URL.
class HttpSearchClient : public SearchClient {
public:
    HttpSearchClient(std::string base_url, std::string api_key);
    static std::unique_ptr<HttpSearchClient> from_env();
    std::vector<SearchHit> search(const std::string& query, std::size_t k) override;

private:
    std::string base_url_;
    std::string api_key_;
};

struct SearchDoc {
    std::string query_used;
    std::size_t rank = 0;  // 1-based within its query
    std::string url;
    std::string title;
    std::string body;
};

struct Shortfall {
    std::string query;
    std::size_t requested = 0;
    std::size_t received = 0;
};

struct ExecutionResult {
    std::vector<SearchDoc> docs;
    std::vector<Shortfall> shortfalls;
    std::vector<std::string> errors;
    std::size_t duplicates_dropped = 0;
};

/// Runs every planned query; URLs already fetched by an earlier query are
/// dropped. Search errors are collected and the remaining queries still run.
ExecutionResult execute_plan(const RagPlan& plan, SearchClient& search);

/// Blank-line paragraphs; bodies without blank lines fall back to
/// 512-character windows overlapping by 128.
std::vector<std::string> split_passages(std::string_view body);

class AnswerabilityScorer {
public:
    virtual ~AnswerabilityScorer() = default;
    /// Estimate in [0, 1] that `passage` answers `query`.
    virtual double score(std::string_view query, std::string_view passage) const = 0;
};

/// Jaccard similarity of content-word sets.
class LexicalScorer : public AnswerabilityScorer {
public:
    double score(std::string_view query, std::string_view passage) const override;
};

struct EvidencePassage {
    std::size_t doc_index = 0;
    std::string url;
    std::string passage;
    double answerability = 0.0;
    std::string paired_query;
};

struct EvidenceSelection {
    std::vector<EvidencePassage> passages;
    std::vector<std::string> warnings;
};

/// Top-1 passage per document against the document's own query, in
/// document order. Documents without text are skipped with a warning.
EvidenceSelection select_evidence(const std::vector<SearchDoc>& docs, const AnswerabilityScorer& scorer);

/// The content-draft block given to the response model.
std::string render_outline_draft(const Outline* outline);
std::string render_evidence(const std::vector<EvidencePassage>& evidence);

CompletionRequest response_request(std::string_view c2_text, const Outline* outline,
                                   const std::vector<EvidencePassage>& evidence);

std::string generate_response(std::string_view c2_text, const Outline* outline,
                              const std::vector<EvidencePassage>& evidence, LlmGateway& llm);

struct RagRun {
    std::string c2_id;
    RagPlan plan;
    ExecutionResult execution;
    EvidenceSelection evidence;
    std::string response_markdown;
};

nlohmann::json to_json(const RagRun& run);

RagRun run_rag(const C2Query& c2, RagMode mode, const Outline* outline, SearchClient& search,
               const AnswerabilityScorer& scorer, LlmGateway& llm);

}  // namespace c2kit
