#pragma once

#include <string>
#include <vector>

#include "pipeline.hpp"

namespace c2kit::cli {

struct BuildTreesOptions {
    std::string input;
    std::string source = "asqa";
    std::string split = "train";
    bool clean = true;
};

struct GenC2Options {
    std::string trees;
};

struct JudgeOptions {
    std::string trees;
    std::string c2;
    std::string candidates;
    std::string outlines;  // score one outline per query instead of candidates
    std::string system;
};

struct ExportOptions {
    std::string trees;
    std::string c2;
    std::string candidates;
    std::string judged;
};

struct BaselineOptions {
    std::string trees;
    std::string c2;
};

struct RagOptions {
    std::string trees;
    std::string c2;
    std::string mode = "outline";
    std::string outlines;
};

struct StatsOptions {
    std::vector<std::string> scores;
    std::string intents;
    std::string contingency;
    std::vector<std::string> compare;  // "A:B"
    std::string report;
};

/// Each returns the process exit code: 0, or 2 when the share of failed
/// items exceeds the configured threshold. Config problems throw ConfigError.
int cmd_build_trees(const PipelineConfig& cfg, const BuildTreesOptions& opt, Logger& log);
int cmd_gen_c2(const PipelineConfig& cfg, const GenC2Options& opt, Logger& log);
int cmd_judge(const PipelineConfig& cfg, const JudgeOptions& opt, Logger& log);
int cmd_export(const PipelineConfig& cfg, const ExportOptions& opt, Logger& log);
int cmd_baseline(const PipelineConfig& cfg, const BaselineOptions& opt, Logger& log);
int cmd_rag(const PipelineConfig& cfg, const RagOptions& opt, Logger& log);
int cmd_stats(const PipelineConfig& cfg, const StatsOptions& opt, Logger& log);

}  // namespace c2kit::cli
