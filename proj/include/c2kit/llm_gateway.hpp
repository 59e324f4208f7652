#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace c2kit {

/// Named prompt with `{{slot}}` placeholders. Every required slot appears
/// exactly once and no other placeholder is allowed.
struct PromptTemplate {
    std::string name;
    std::string text;
    std::set<std::string> required_slots;
};

using SlotMap = std::map<std::string, std::string>;

class TemplateRegistry {
public:
    /// Throws std::invalid_argument on a duplicate name or a malformed template.
    void add(PromptTemplate tmpl);

    bool contains(const std::string& name) const { return templates_.count(name) != 0; }
    const PromptTemplate& get(const std::string& name) const;
    std::vector<std::string> names() const;

    /// Each slot value is XML-escaped (& and <) and wrapped in <slot>...</slot>,
    /// which makes rendering injective over slot values.
    std::string render(const std::string& name, const SlotMap& slots) const;

private:
    std::map<std::string, PromptTemplate> templates_;
};

/// The five templates used by the pipeline: tree_decompose,
/// coverage_generate, candidate_extract, judge_score, rag_respond.
TemplateRegistry default_templates();

enum class CompletionMode { Text, Json };

struct CompletionRequest {
    std::string template_name;
    SlotMap slots;
    double temperature = 1.0;
    int max_output = 2048;
    CompletionMode mode = CompletionMode::Text;
};

/// Stable across processes: FNV-1a over the canonical JSON of the request.
std::string request_hash(const CompletionRequest& req);

struct CompletionResult {
    std::string text;
    std::string provider;
    std::int64_t latency_ms = 0;
    int attempt = 1;
    std::string request_hash;
};

/// Thrown by providers for failures worth retrying (timeouts, 429, 5xx).
class TransientError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class GatewayError : public std::runtime_error {
public:
    enum class Kind { UnknownTemplate, SlotMissing, ProviderExhausted, JsonModeUnparseable, OutputRejected, Provider };

    GatewayError(Kind kind, const std::string& what, int attempts = 0)
        : std::runtime_error(what), kind_(kind), attempts_(attempts) {}

    Kind kind() const noexcept { return kind_; }
    int attempts() const noexcept { return attempts_; }

private:
    Kind kind_;
    int attempts_;
};

class CompletionProvider {
public:
    virtual ~CompletionProvider() = default;
    virtual std::string name() const = 0;
    /// `attempt` starts at 1. Throw TransientError to request a retry.
    virtual std::string complete(const std::string& prompt, const CompletionRequest& req, const std::string& hash,
                                 int attempt) = 0;
};

/// Deterministic provider: fixture texts keyed by request hash, with an
/// optional responder for anything not in the fixture table.
class MockProvider : public CompletionProvider {
public:
    using Responder = std::function<std::string(const CompletionRequest&, const std::string& prompt)>;

    explicit MockProvider(Responder responder = {}) : responder_(std::move(responder)) {}

    void add_fixture(const CompletionRequest& req, std::string text);
    std::string name() const override { return "mock"; }
    std::string complete(const std::string& prompt, const CompletionRequest& req, const std::string& hash,
                         int attempt) override;

private:
    std::unordered_map<std::string, std::string> fixtures_;
    Responder responder_;
};

/// Returns (or throws) a fixed script of outcomes in order, for tests.
class ScriptedProvider : public CompletionProvider {
public:
    struct Step {
        std::string text;
        bool transient_failure = false;
    };

    explicit ScriptedProvider(std::vector<Step> steps) : steps_(steps.begin(), steps.end()) {}

    std::string name() const override { return "scripted"; }
    std::string complete(const std::string& prompt, const CompletionRequest& req, const std::string& hash,
                         int attempt) override;
    std::size_t calls() const { return calls_; }
    const std::vector<std::string>& prompts() const { return prompts_; }

private:
    std::mutex mu_;
    std::deque<Step> steps_;
    std::size_t calls_ = 0;
    std::vector<std::string> prompts_;
};

struct JournalEntry {
    std::string request_hash;
    std::string template_name;
    SlotMap slots;
    double temperature = 1.0;
    std::string mode;
    int attempt = 1;
    std::string provider;
    std::string response;
};

nlohmann::json to_json(const JournalEntry& e);
JournalEntry journal_entry_from_json(const nlohmann::json& j);

/// Append-only JSONL log of every provider response. Writes are serialized.
class Journal {
public:
    explicit Journal(const std::string& path);
    void record(const JournalEntry& entry);
    static std::vector<JournalEntry> load(const std::string& path);

private:
    std::mutex mu_;
    std::ofstream out_;
};

/// Replays a journal: responses for a request hash are served in recorded
/// order, the last one repeating once exhausted. Reports the provider name
/// found in the journal so replayed outputs match the recorded run.
class ReplayProvider : public CompletionProvider {
public:
    explicit ReplayProvider(const std::vector<JournalEntry>& entries);
    static std::shared_ptr<ReplayProvider> from_file(const std::string& path);

    std::string name() const override { return name_; }
    std::string complete(const std::string& prompt, const CompletionRequest& req, const std::string& hash,
                         int attempt) override;

private:
    struct Queue {
        std::vector<std::string> responses;
        std::size_t next = 0;
    };
    std::mutex mu_;
    std::unordered_map<std::string, Queue> by_hash_;
    std::string name_ = "replay";
};

/// OpenAI-compatible chat completions endpoint. Configured from
/// LLM_BASE_URL, LLM_API_KEY and LLM_MODEL unless given explicitly.
class HttpChatProvider : public CompletionProvider {
public:
    struct Options {
        std::string base_url;
        std::string api_key;
        std::string model;
        std::chrono::seconds timeout{120};
    };

    explicit HttpChatProvider(Options options);
    static Options options_from_env();

    std::string name() const override { return "http:" + options_.model; }
    std::string complete(const std::string& prompt, const CompletionRequest& req, const std::string& hash,
                         int attempt) override;

private:
    Options options_;
};

/// Requests per minute; zero disables limiting.
class TokenBucket {
public:
    explicit TokenBucket(double per_minute, double burst = 1.0);
    /// Blocks until a token is available.
    void acquire();

private:
    std::mutex mu_;
    double rate_per_sec_;
    double capacity_;
    double tokens_;
    std::chrono::steady_clock::time_point last_;
};

struct GatewayConfig {
    int max_attempts = 5;
    std::chrono::milliseconds backoff_base{1000};
    double backoff_factor = 2.0;
    double requests_per_minute = 0.0;
    int max_in_flight = 8;
};

/// Returns an error message when the output should be rejected and retried.
using OutputCheck = std::function<std::optional<std::string>(const std::string&)>;

class LlmGateway {
public:
    LlmGateway(TemplateRegistry templates, std::shared_ptr<CompletionProvider> provider, GatewayConfig config = {},
               std::shared_ptr<Journal> journal = nullptr);

    /// Renders, calls the provider and retries transient failures with
    /// exponential backoff. Json mode (and a supplied check) retry on
    /// unacceptable output within the same attempt budget.
    CompletionResult complete(const CompletionRequest& req, const OutputCheck& check = {});

    std::string render_prompt(const CompletionRequest& req) const;
    const TemplateRegistry& templates() const { return templates_; }
    const std::string& provider_name() const { return provider_name_; }

    /// Replaces the sleep used between attempts (tests use a recorder).
    void set_sleeper(std::function<void(std::chrono::milliseconds)> sleeper) { sleeper_ = std::move(sleeper); }

    std::size_t request_count() const;

private:
    TemplateRegistry templates_;
    std::shared_ptr<CompletionProvider> provider_;
    std::string provider_name_;
    GatewayConfig config_;
    std::shared_ptr<Journal> journal_;
    TokenBucket bucket_;
    std::function<void(std::chrono::milliseconds)> sleeper_;

    mutable std::mutex mu_;
    std::condition_variable slot_free_;
    int in_flight_ = 0;
    std::size_t requests_ = 0;
};

}  // namespace c2kit
