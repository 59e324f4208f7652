#include "c2kit/llm_gateway.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "c2kit/util.hpp"

namespace c2kit {

namespace {

/// Placeholder names in order of appearance.
std::vector<std::string> placeholders(const std::string& text) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while ((pos = text.find("{{", pos)) != std::string::npos) {
        const auto end = text.find("}}", pos + 2);
        if (end == std::string::npos) {
            out.emplace_back();  // unterminated marker
            break;
        }
        out.push_back(text.substr(pos + 2, end - pos - 2));
        pos = end + 2;
    }
    return out;
}

std::string escape_slot(const std::string& value) {
    std::string out;
    out.reserve(value.size());
    for (char c : value) {
        if (c == '&') {
            out += "&amp;";
        } else if (c == '<') {
            out += "&lt;";
        } else {
            out += c;
        }
    }
    return out;
}

std::string_view mode_name(CompletionMode mode) {
    return mode == CompletionMode::Json ? "json" : "text";
}

}  // namespace

void TemplateRegistry::add(PromptTemplate tmpl) {
    if (templates_.count(tmpl.name)) throw std::invalid_argument("duplicate template '" + tmpl.name + "'");
    const auto found = placeholders(tmpl.text);
    for (const auto& slot : found) {
        if (!tmpl.required_slots.count(slot)) {
            throw std::invalid_argument("template '" + tmpl.name + "' has undeclared placeholder '" + slot + "'");
        }
    }
    for (const auto& slot : tmpl.required_slots) {
        if (std::count(found.begin(), found.end(), slot) != 1) {
            throw std::invalid_argument("slot '" + slot + "' must appear exactly once in '" + tmpl.name + "'");
        }
    }
    auto name = tmpl.name;
    templates_.emplace(std::move(name), std::move(tmpl));
}

const PromptTemplate& TemplateRegistry::get(const std::string& name) const {
    auto it = templates_.find(name);
    if (it == templates_.end()) throw GatewayError(GatewayError::Kind::UnknownTemplate, "unknown template '" + name + "'");
    return it->second;
}

std::vector<std::string> TemplateRegistry::names() const {
    std::vector<std::string> out;
    for (const auto& [name, _] : templates_) out.push_back(name);
    return out;
}

std::string TemplateRegistry::render(const std::string& name, const SlotMap& slots) const {
    const auto& tmpl = get(name);
    for (const auto& slot : tmpl.required_slots) {
        if (!slots.count(slot)) {
            throw GatewayError(GatewayError::Kind::SlotMissing, "template '" + name + "' is missing slot '" + slot + "'");
        }
    }
    std::string out;
    const std::string& text = tmpl.text;
    std::size_t pos = 0;
    while (true) {
        const auto open = text.find("{{", pos);
        if (open == std::string::npos) break;
        const auto close = text.find("}}", open + 2);
        const std::string slot = text.substr(open + 2, close - open - 2);
        out.append(text, pos, open - pos);
        out += "<" + slot + ">\n" + escape_slot(slots.at(slot)) + "\n</" + slot + ">";
        pos = close + 2;
    }
    out.append(text, pos);
    return out;
}

std::string request_hash(const CompletionRequest& req) {
    const nlohmann::json canonical = {{"template", req.template_name},
                                      {"slots", req.slots},
                                      {"temperature", req.temperature},
                                      {"max_output", req.max_output},
                                      {"mode", mode_name(req.mode)}};
    return hex64(fnv1a(canonical.dump()));
}

void MockProvider::add_fixture(const CompletionRequest& req, std::string text) {
    fixtures_[request_hash(req)] = std::move(text);
}

std::string MockProvider::complete(const std::string& prompt, const CompletionRequest& req, const std::string& hash,
                                   int) {
    if (auto it = fixtures_.find(hash); it != fixtures_.end()) return it->second;
    if (responder_) return responder_(req, prompt);
    throw GatewayError(GatewayError::Kind::Provider, "mock has no fixture for request " + hash);
}

std::string ScriptedProvider::complete(const std::string& prompt, const CompletionRequest&, const std::string&, int) {
    std::lock_guard lock(mu_);
    ++calls_;
    prompts_.push_back(prompt);
    if (steps_.empty()) throw GatewayError(GatewayError::Kind::Provider, "scripted provider ran out of steps");
    Step step = steps_.front();
    steps_.pop_front();
    if (step.transient_failure) throw TransientError("scripted transient failure");
    return step.text;
}

nlohmann::json to_json(const JournalEntry& e) {
    return {{"request_hash", e.request_hash}, {"template", e.template_name}, {"slots", e.slots},
            {"temperature", e.temperature},   {"mode", e.mode},             {"attempt", e.attempt},
            {"provider", e.provider},         {"response", e.response}};
}

JournalEntry journal_entry_from_json(const nlohmann::json& j) {
    JournalEntry e;
    e.request_hash = j.at("request_hash").get<std::string>();
    e.template_name = j.value("template", "");
    e.slots = j.value("slots", SlotMap{});
    e.temperature = j.value("temperature", 1.0);
    e.mode = j.value("mode", "text");
    e.attempt = j.value("attempt", 1);
    e.provider = j.value("provider", "");
    e.response = j.at("response").get<std::string>();
    return e;
}

Journal::Journal(const std::string& path) : out_(path, std::ios::app) {
    if (!out_) throw std::runtime_error("cannot open journal " + path);
}

void Journal::record(const JournalEntry& entry) {
    std::lock_guard lock(mu_);
    out_ << to_json(entry).dump() << '\n';
    out_.flush();
}

std::vector<JournalEntry> Journal::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open journal " + path);
    std::vector<JournalEntry> entries;
    std::string line;
    while (std::getline(in, line)) {
        if (trim_copy(line).empty()) continue;
        entries.push_back(journal_entry_from_json(nlohmann::json::parse(line)));
    }
    return entries;
}

ReplayProvider::ReplayProvider(const std::vector<JournalEntry>& entries) {
    std::set<std::string> providers;
    for (const auto& e : entries) {
        by_hash_[e.request_hash].responses.push_back(e.response);
        providers.insert(e.provider);
    }
    if (providers.size() == 1 && !providers.begin()->empty()) name_ = *providers.begin();
}

std::shared_ptr<ReplayProvider> ReplayProvider::from_file(const std::string& path) {
    return std::make_shared<ReplayProvider>(Journal::load(path));
}

std::string ReplayProvider::complete(const std::string&, const CompletionRequest& req, const std::string& hash, int) {
    std::lock_guard lock(mu_);
    auto it = by_hash_.find(hash);
    if (it == by_hash_.end()) {
        throw GatewayError(GatewayError::Kind::Provider,
                           "journal has no response for " + req.template_name + " request " + hash);
    }
    auto& q = it->second;
    const std::size_t idx = std::min(q.next, q.responses.size() - 1);
    if (q.next < q.responses.size()) ++q.next;
    return q.responses[idx];
}

TokenBucket::TokenBucket(double per_minute, double burst)
    : rate_per_sec_(per_minute / 60.0),
      capacity_(std::max(1.0, burst)),
      tokens_(capacity_),
      last_(std::chrono::steady_clock::now()) {}

void TokenBucket::acquire() {
    if (rate_per_sec_ <= 0.0) return;
    std::unique_lock lock(mu_);
    while (true) {
        const auto now = std::chrono::steady_clock::now();
        const double elapsed = std::chrono::duration<double>(now - last_).count();
        tokens_ = std::min(capacity_, tokens_ + elapsed * rate_per_sec_);
        last_ = now;
        if (tokens_ >= 1.0) {
            tokens_ -= 1.0;
            return;
        }
        const double wait = (1.0 - tokens_) / rate_per_sec_;
        lock.unlock();
        std::this_thread::sleep_for(std::chrono::duration<double>(wait));
        lock.lock();
    }
}

LlmGateway::LlmGateway(TemplateRegistry templates, std::shared_ptr<CompletionProvider> provider, GatewayConfig config,
                       std::shared_ptr<Journal> journal)
    : templates_(std::move(templates)),
      provider_(std::move(provider)),
      provider_name_(provider_ ? provider_->name() : ""),
      config_(config),
      journal_(std::move(journal)),
      bucket_(config.requests_per_minute),
      sleeper_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {
    if (!provider_) throw std::invalid_argument("gateway needs a provider");
    if (config_.max_attempts < 1) throw std::invalid_argument("max_attempts must be >= 1");
}

std::string LlmGateway::render_prompt(const CompletionRequest& req) const {
    return templates_.render(req.template_name, req.slots);
}

std::size_t LlmGateway::request_count() const {
    std::lock_guard lock(mu_);
    return requests_;
}

CompletionResult LlmGateway::complete(const CompletionRequest& req, const OutputCheck& check) {
    if (req.temperature < 0.0 || req.temperature > 2.0) throw std::invalid_argument("temperature must be in [0, 2]");
    const std::string prompt = render_prompt(req);
    const std::string hash = request_hash(req);

    {
        std::unique_lock lock(mu_);
        slot_free_.wait(lock, [&] { return in_flight_ < config_.max_in_flight; });
        ++in_flight_;
    }
    struct Release {
        LlmGateway* self;
        ~Release() {
            {
                std::lock_guard lock(self->mu_);
                --self->in_flight_;
            }
            self->slot_free_.notify_one();
        }
    } release{this};

    enum class Failure { None, Transient, Json, Rejected } last_failure = Failure::None;
    std::string last_message;
    auto delay = config_.backoff_base;
    for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
        if (attempt > 1) {
            sleeper_(delay);
            delay = std::chrono::milliseconds(static_cast<std::int64_t>(std::llround(delay.count() * config_.backoff_factor)));
        }
        bucket_.acquire();
        {
            std::lock_guard lock(mu_);
            ++requests_;
        }
        const auto start = std::chrono::steady_clock::now();
        std::string text;
        try {
            text = provider_->complete(prompt, req, hash, attempt);
        } catch (const TransientError& e) {
            last_failure = Failure::Transient;
            last_message = e.what();
            continue;
        }
        const auto latency =
            std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();

        if (journal_) {
            journal_->record(JournalEntry{hash, req.template_name, req.slots, req.temperature,
                                          std::string(mode_name(req.mode)), attempt, provider_name_, text});
        }

        if (req.mode == CompletionMode::Json && !nlohmann::json::accept(text)) {
            last_failure = Failure::Json;
            last_message = "output is not valid JSON";
            continue;
        }
        if (check) {
            if (auto problem = check(text)) {
                last_failure = Failure::Rejected;
                last_message = *problem;
                continue;
            }
        }
        return CompletionResult{std::move(text), provider_name_, latency, attempt, hash};
    }

    const std::string where = req.template_name + " after " + std::to_string(config_.max_attempts) + " attempts: ";
    switch (last_failure) {
        case Failure::Json:
            throw GatewayError(GatewayError::Kind::JsonModeUnparseable, where + last_message, config_.max_attempts);
        case Failure::Rejected:
            throw GatewayError(GatewayError::Kind::OutputRejected, where + last_message, config_.max_attempts);
        default:
            throw GatewayError(GatewayError::Kind::ProviderExhausted, where + last_message, config_.max_attempts);
    }
}

}  // namespace c2kit
