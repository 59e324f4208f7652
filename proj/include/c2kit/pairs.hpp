#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "c2kit/c2.hpp"
#include "c2kit/judge.hpp"
#include "c2kit/outline.hpp"
#include "c2kit/qtree.hpp"

namespace c2kit {

inline constexpr std::string_view kOutlineSeparator = "### Selected Outline";

/// Instruction prompt wrapping a C2 query.
std::string planner_prompt(std::string_view c2_text);

/// Rendered tree, the separator line, then the rendered outline.
std::string planner_completion(const QTree& tree, const Outline& outline);

/// Inverse of planner_completion. Throws TreeError / std::invalid_argument.
std::pair<QTree, Outline> parse_planner_completion(std::string_view completion, std::string base_query,
                                                   std::string tree_id = {});

struct SftRecord {
    std::string c2_id;
    std::size_t candidate_index = 0;
    std::string prompt;
    std::string completion;
};

nlohmann::json to_json(const SftRecord& r);

/// A finalized C2 query with its tree and three candidate outlines.
struct CandidateSet {
    C2Query query;
    const QTree* tree = nullptr;
    std::vector<Outline> candidates;
    bool noisy = false;
};

/// One record per candidate of every non-noisy query.
std::vector<SftRecord> build_sft(const std::vector<CandidateSet>& dataset);

enum class NegativeKind { Scored, Synthetic };
std::string_view to_string(NegativeKind k);

struct DpoRecord {
    std::string c2_id;
    std::string tree_id;
    std::string prompt;
    std::string chosen;
    std::string rejected;
    NegativeKind negative_kind = NegativeKind::Scored;
    IntentOp intent = IntentOp::Inclusion;
    TreePath background;
    std::vector<TreePath> chosen_paths;
    std::vector<TreePath> rejected_paths;
    int chosen_score = 0;
    std::optional<int> rejected_score;  // absent for synthetic negatives
};

nlohmann::json to_json(const DpoRecord& r);

struct JudgedGroup {
    C2Query query;
    const QTree* tree = nullptr;
    std::vector<JudgedOutline> judged;  // in candidate order
};

struct DpoBuild {
    std::vector<DpoRecord> records;
    std::size_t skipped_ties = 0;
};

/// chosen = best, rejected = worst per rank_candidates; tied groups skipped.
DpoBuild build_dpo(const std::vector<JudgedGroup>& groups);

/// Keeps prompts and chosen completions; replaces each rejected outline with
/// an opposite-intent synthetic negative. Throws UnsatisfiableError.
std::vector<DpoRecord> build_synneg(const std::vector<DpoRecord>& scored, const std::map<std::string, QTree>& trees,
                                    std::uint64_t seed);

/// Scored records first, then synthetic ones.
std::vector<DpoRecord> build_combined(const std::vector<DpoRecord>& scored, const std::vector<DpoRecord>& synneg);

struct ExportCounts {
    std::size_t queries = 0;
    std::size_t noisy = 0;
    std::size_t sft = 0;
    std::size_t dpo = 0;
    std::size_t ties = 0;
    std::size_t synneg = 0;
    std::size_t combined = 0;
};

/// metadata.yaml: record counts plus the training hyperparameters used for
/// the planner (recorded for reference, not consumed).
std::string render_export_metadata(const ExportCounts& counts, std::uint64_t seed, const std::string& config_hash);

}  // namespace c2kit
