#include "pipeline.hpp"

#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <thread>

#include "c2kit/mock_llm.hpp"
#include "c2kit/util.hpp"

namespace c2kit::cli {

nlohmann::json PipelineConfig::hashed() const {
    return {{"toolkit_version", kVersion},
            {"seed", seed},
            {"intent_ratio", intent_ratio},
            {"gateway",
             {{"max_attempts", gateway.max_attempts},
              {"backoff_ms", gateway.backoff_base.count()},
              {"backoff_factor", gateway.backoff_factor}}}};
}

std::string PipelineConfig::hash() const {
    return hex64(fnv1a(hashed().dump()));
}

void apply_config_file(PipelineConfig& cfg, const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config " + path + " is not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config " + path + " must be a JSON object");
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "seed") {
                cfg.seed = value.get<std::uint64_t>();
            } else if (key == "workers") {
                cfg.workers = value.get<std::size_t>();
            } else if (key == "intent_ratio") {
                cfg.intent_ratio = value.get<double>();
            } else if (key == "failure_threshold") {
                cfg.failure_threshold = value.get<double>();
            } else if (key == "out_dir") {
                cfg.out_dir = value.get<std::string>();
            } else if (key == "journal") {
                cfg.journal = value.get<std::string>();
            } else if (key == "search_fixtures") {
                cfg.search_fixtures = value.get<std::string>();
            } else if (key == "log_level") {
                cfg.log_level = value.get<std::string>();
            } else if (key == "gateway") {
                for (const auto& [gk, gv] : value.items()) {
                    if (gk == "max_attempts") {
                        cfg.gateway.max_attempts = gv.get<int>();
                    } else if (gk == "backoff_ms") {
                        cfg.gateway.backoff_base = std::chrono::milliseconds(gv.get<long>());
                    } else if (gk == "backoff_factor") {
                        cfg.gateway.backoff_factor = gv.get<double>();
                    } else if (gk == "requests_per_minute") {
                        cfg.gateway.requests_per_minute = gv.get<double>();
                    } else if (gk == "max_in_flight") {
                        cfg.gateway.max_in_flight = gv.get<int>();
                    } else {
                        throw ConfigError("unknown gateway key '" + gk + "' in " + path);
                    }
                }
            } else {
                throw ConfigError("unknown config key '" + key + "' in " + path);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config " + path + ": " + e.what());
    }
}

LogLevel log_level_from_string(const std::string& s) {
    const auto l = to_lower(s);
    if (l == "debug") return LogLevel::Debug;
    if (l == "info") return LogLevel::Info;
    if (l == "warn" || l == "warning") return LogLevel::Warn;
    if (l == "error") return LogLevel::Error;
    throw ConfigError("unknown log level '" + s + "'");
}

void Logger::log(LogLevel level, const std::string& event, nlohmann::json fields) {
    if (level < min_) return;
    static constexpr const char* kNames[] = {"debug", "info", "warn", "error"};
    nlohmann::json line = {{"level", kNames[static_cast<int>(level)]}, {"event", event}};
    if (fields.is_object()) {
        for (auto& [k, v] : fields.items()) line[k] = std::move(v);
    }
    std::lock_guard lock(mu_);
    std::cerr << line.dump() << '\n';
}

nlohmann::json header_line(const FileHeader& h) {
    return {{"_header",
             {{"toolkit", h.toolkit},
              {"version", h.version},
              {"schema", h.schema},
              {"config_hash", h.config_hash},
              {"seed", h.seed}}}};
}

FileHeader make_header(const PipelineConfig& cfg, const std::string& schema) {
    FileHeader h;
    h.schema = schema;
    h.config_hash = cfg.hash();
    h.seed = cfg.seed;
    return h;
}

namespace {

FileHeader parse_header(const nlohmann::json& j) {
    const auto& h = j.at("_header");
    FileHeader out;
    out.toolkit = h.value("toolkit", "");
    out.version = h.value("version", "");
    out.schema = h.value("schema", "");
    out.config_hash = h.value("config_hash", "");
    out.seed = h.value("seed", std::uint64_t{0});
    return out;
}

std::string join(const std::set<std::string>& s) {
    std::string out;
    for (const auto& x : s) out += (out.empty() ? "" : ", ") + x;
    return out;
}

}  // namespace

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

StageFile read_stage(const std::string& path, const std::set<std::string>& schemas) {
    const auto content = read_text_file(path);
    StageFile file;
    bool have_header = false;
    std::size_t line_no = 0;
    for (const auto& line : split_lines(content)) {
        ++line_no;
        if (trim_copy(line).empty()) continue;
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) throw ConfigError(path + ":" + std::to_string(line_no) + ": not JSON");
        if (!have_header) {
            if (!j.is_object() || !j.contains("_header")) {
                throw StageMismatch(path + " has no stage header; expected " + join(schemas));
            }
            file.header = parse_header(j);
            if (!schemas.count(file.header.schema)) {
                throw StageMismatch(path + " holds '" + file.header.schema + "' records; expected " + join(schemas));
            }
            have_header = true;
            continue;
        }
        file.records.push_back(std::move(j));
    }
    if (!have_header) throw StageMismatch(path + " is empty; expected " + join(schemas));
    return file;
}

StageWriter::StageWriter(const std::string& path, const FileHeader& header, const std::string& id_key,
                         bool overwrite) {
    if (const auto dir = std::filesystem::path(path).parent_path(); !dir.empty()) {
        std::filesystem::create_directories(dir);
    }
    bool resume = false;
    if (!overwrite && std::filesystem::exists(path) && std::filesystem::file_size(path) > 0) {
        const auto existing = read_stage(path, {header.schema});
        if (existing.header.config_hash != header.config_hash || existing.header.seed != header.seed) {
            throw StageMismatch(path + " was written with a different configuration; pass --overwrite to replace it");
        }
        for (const auto& r : existing.records) {
            if (r.contains(id_key)) existing_.insert(r[id_key].get<std::string>());
        }
        resume = true;
    }
    out_.open(path, resume ? std::ios::app | std::ios::binary : std::ios::trunc | std::ios::binary);
    if (!out_) throw ConfigError("cannot write " + path);
    if (!resume) out_ << header_line(header).dump() << '\n';
    out_.flush();
}

void StageWriter::write(const nlohmann::json& record) {
    std::lock_guard lock(mu_);
    out_ << record.dump() << '\n';
    out_.flush();
}

void write_stage(const std::string& path, const FileHeader& header, const std::vector<nlohmann::json>& records) {
    if (const auto dir = std::filesystem::path(path).parent_path(); !dir.empty()) {
        std::filesystem::create_directories(dir);
    }
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    out << header_line(header).dump() << '\n';
    for (const auto& r : records) out << r.dump() << '\n';
}

void ordered_parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn,
                          const std::function<void(std::size_t)>& emit) {
    if (n == 0) return;
    workers = std::max<std::size_t>(1, std::min(workers, n));

    std::mutex mu;
    std::vector<bool> finished(n, false);
    std::size_t next_emit = 0;
    std::atomic<std::size_t> next_item{0};
    std::exception_ptr failure;

    const auto worker = [&] {
        for (;;) {
            const std::size_t i = next_item.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!failure) failure = std::current_exception();
            }
            std::lock_guard lock(mu);
            finished[i] = true;
            while (next_emit < n && finished[next_emit]) {
                if (!failure) emit(next_emit);
                ++next_emit;
            }
        }
    };

    std::vector<std::thread> threads;
    for (std::size_t w = 1; w < workers; ++w) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);
}

std::unique_ptr<LlmGateway> make_gateway(const PipelineConfig& cfg) {
    std::shared_ptr<CompletionProvider> provider;
    if (!cfg.replay_journal.empty()) {
        if (!std::filesystem::exists(cfg.replay_journal)) throw ConfigError("replay journal " + cfg.replay_journal + " not found");
        provider = ReplayProvider::from_file(cfg.replay_journal);
    } else if (cfg.mock) {
        provider = std::make_shared<MockProvider>(synthetic_responder());
    } else {
        try {
            provider = std::make_shared<HttpChatProvider>(HttpChatProvider::options_from_env());
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    std::shared_ptr<Journal> journal;
    if (!cfg.journal.empty()) {
        if (const auto dir = std::filesystem::path(cfg.journal).parent_path(); !dir.empty()) {
            std::filesystem::create_directories(dir);
        }
        journal = std::make_shared<Journal>(cfg.journal);
    }
    return std::make_unique<LlmGateway>(default_templates(), std::move(provider), cfg.gateway, std::move(journal));
}

}  // namespace c2kit::cli
