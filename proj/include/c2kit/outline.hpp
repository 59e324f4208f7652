#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "c2kit/qtree.hpp"

namespace c2kit {

inline constexpr std::size_t kOutlineSize = 4;

enum class IntentOp { Inclusion, Exclusion };

std::string_view to_string(IntentOp op);
IntentOp intent_from_string(std::string_view text);
IntentOp opposite(IntentOp op);

/// Four connected tree nodes in depth-first order, plus their texts.
struct Outline {
    std::string tree_id;
    std::vector<TreePath> paths;
    std::vector<std::string> texts;

    bool contains(const TreePath& path) const;
    friend bool operator==(const Outline&, const Outline&) = default;
};

enum class Violation { WrongSize, Duplicate, Disconnected, UnknownPath };
std::string_view to_string(Violation v);

struct OutlineVerdict {
    std::vector<Violation> violations;

    bool valid() const noexcept { return violations.empty(); }
    bool has(Violation v) const;
};

/// Connectivity of the induced subgraph under neighbors() adjacency.
/// Duplicates are ignored; an empty set counts as connected.
bool is_connected(std::span<const TreePath> paths);

/// Reports every violation, not just the first. Violations appear in the
/// order WrongSize, Duplicate, Disconnected, UnknownPath.
OutlineVerdict validate_outline(std::span<const TreePath> paths);

/// Same as above for raw path strings; unparseable strings are UnknownPath.
OutlineVerdict validate_outline(std::span<const std::string> paths);

/// Builds the canonical Outline value from a valid path set in any order.
/// Throws std::invalid_argument when the paths do not validate.
Outline make_outline(const QTree& tree, std::vector<TreePath> paths);

/// All valid outlines of a full tree, in canonical order (lexicographic over
/// the depth-first sorted path lists).
std::vector<Outline> enumerate_outlines(const QTree& tree);

enum class TrimStatus { Trimmed, NotApplicable, Untrimmable };

struct TrimResult {
    TrimStatus status;
    /// Trimmed paths on success; otherwise the input unchanged.
    std::vector<TreePath> paths;
};

/// Reduce an oversized candidate to 4 nodes by removing nodes whose removal
/// does not split the remainder, preferring the deepest and then the
/// numerically largest path. Input must have more than 4 distinct paths.
TrimResult trim_outline(std::span<const TreePath> paths);

/// Random baseline: uniform start node, then uniform picks from the frontier
/// (union of neighbours of all selected nodes) until 4 nodes are selected.
Outline random_outline(const QTree& tree, std::uint64_t seed);

/// Same walk with a fixed start node.
std::vector<TreePath> random_walk_from(const TreePath& start, std::uint64_t seed);

class UnsatisfiableError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr int kSyntheticNegativeBudget = 1000;

/// Opposite-intent negative: for Inclusion the result avoids `background`,
/// for Exclusion it contains it. Always differs from `positive`.
Outline synthetic_negative(const QTree& tree, const Outline& positive, const TreePath& background, IntentOp intent,
                           std::uint64_t seed);

/// True when `outline` has the membership property required of a synthetic
/// negative for `intent`.
bool satisfies_negative_property(const Outline& outline, const TreePath& background, IntentOp intent);

/// One slot of an LLM candidate-extraction answer.
struct CandidateParse {
    std::optional<Outline> outline;      // set when the slot parsed and validated
    std::vector<std::string> raw_paths;  // as emitted, before trimming
    OutlineVerdict verdict;
    bool trimmed = false;
    std::string json_error;              // non-empty for JsonError slots
    std::vector<std::string> warnings;

    bool ok() const noexcept { return json_error.empty() && outline.has_value(); }
};

inline constexpr std::size_t kCandidatesPerQuery = 3;

/// Parse `{"candidates": [{"queries": [{"path": "1.1", "text": "..."}]}, ...]}`.
/// Each slot is parsed independently, so one malformed candidate does not
/// discard its neighbours. At most 3 slots are returned.
std::vector<CandidateParse> parse_candidates(std::string_view raw_llm_output, const QTree& tree);

/// Levenshtein distance over bytes.
std::size_t edit_distance(std::string_view a, std::string_view b);

nlohmann::json outline_to_json(const Outline& outline);
Outline outline_from_json(const nlohmann::json& j, const QTree& tree);

/// Outline rendered in the tree listing format, one line per node.
std::string render_outline(const Outline& outline);

}  // namespace c2kit
