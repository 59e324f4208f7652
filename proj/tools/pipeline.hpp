#pragma once

#include <atomic>
#include <cstdint>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "c2kit/llm_gateway.hpp"

namespace c2kit::cli {

inline constexpr const char* kToolkit = "c2kit";
inline constexpr const char* kVersion = "0.1.0";

/// Bad flags, unreadable inputs, mismatched stage files. Exit code 1.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class StageMismatch : public ConfigError {
public:
    using ConfigError::ConfigError;
};

struct PipelineConfig {
    std::uint64_t seed = 42;
    std::size_t workers = 4;
    double intent_ratio = 0.5;
    double failure_threshold = 0.2;
    GatewayConfig gateway;

    std::string out_dir = "out";
    std::string journal;         // record every provider response here
    std::string replay_journal;  // serve responses from here instead of a provider
    bool mock = false;
    std::string search_fixtures;
    std::string log_level = "info";
    bool overwrite = false;

    /// Only the settings that can change output bytes.
    nlohmann::json hashed() const;
    std::string hash() const;
};

/// Applies a JSON config file on top of `cfg`. Unknown keys are rejected.
void apply_config_file(PipelineConfig& cfg, const std::string& path);

enum class LogLevel { Debug, Info, Warn, Error };
LogLevel log_level_from_string(const std::string& s);

/// JSON-lines logger on stderr.
class Logger {
public:
    explicit Logger(LogLevel min = LogLevel::Info) : min_(min) {}
    void log(LogLevel level, const std::string& event, nlohmann::json fields = nlohmann::json::object());
    void debug(const std::string& e, nlohmann::json f = nlohmann::json::object()) { log(LogLevel::Debug, e, std::move(f)); }
    void info(const std::string& e, nlohmann::json f = nlohmann::json::object()) { log(LogLevel::Info, e, std::move(f)); }
    void warn(const std::string& e, nlohmann::json f = nlohmann::json::object()) { log(LogLevel::Warn, e, std::move(f)); }
    void error(const std::string& e, nlohmann::json f = nlohmann::json::object()) { log(LogLevel::Error, e, std::move(f)); }

private:
    std::mutex mu_;
    LogLevel min_;
};

struct FileHeader {
    std::string toolkit = kToolkit;
    std::string version = kVersion;
    std::string schema;
    std::string config_hash;
    std::uint64_t seed = 0;
};

nlohmann::json header_line(const FileHeader& h);
FileHeader make_header(const PipelineConfig& cfg, const std::string& schema);

struct StageFile {
    FileHeader header;
    std::vector<nlohmann::json> records;
};

/// Reads a JSONL stage file. The first line must be a header whose schema is
/// one of `schemas`; otherwise StageMismatch.
StageFile read_stage(const std::string& path, const std::set<std::string>& schemas);

/// Appends records to a stage file. An existing file with the same schema and
/// config hash is resumed (ids already present are reported by done());
/// a different header is a StageMismatch unless `overwrite` is set.
class StageWriter {
public:
    StageWriter(const std::string& path, const FileHeader& header, const std::string& id_key, bool overwrite);

    bool done(const std::string& id) const { return existing_.count(id) != 0; }
    std::size_t resumed() const { return existing_.size(); }
    void write(const nlohmann::json& record);

private:
    std::mutex mu_;
    std::ofstream out_;
    std::set<std::string> existing_;
};

/// Writes a complete stage file (header plus records), replacing any old one.
void write_stage(const std::string& path, const FileHeader& header, const std::vector<nlohmann::json>& records);

/// Runs fn(i) for i in [0, n) on up to `workers` threads. emit(i) is called
/// in index order, each as soon as all earlier items have finished, so
/// output order never depends on scheduling.
void ordered_parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn,
                          const std::function<void(std::size_t)>& emit);

std::string read_text_file(const std::string& path);

/// Gateway for the configured provider: replay journal, synthetic mock, or
/// the HTTP chat endpoint from the environment.
std::unique_ptr<LlmGateway> make_gateway(const PipelineConfig& cfg);

}  // namespace c2kit::cli
