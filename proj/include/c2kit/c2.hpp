#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "c2kit/llm_gateway.hpp"
#include "c2kit/outline.hpp"
#include "c2kit/qtree.hpp"

namespace c2kit {

enum class SeedSource { ASQA, Longform, ExpertQA };
enum class Split { Train, Test };

std::string_view to_string(SeedSource s);
SeedSource seed_source_from_string(std::string_view s);
std::string_view to_string(Split s);
Split split_from_string(std::string_view s);

struct SeedQuery {
    std::string id;
    SeedSource source = SeedSource::ASQA;
    Split split = Split::Train;
    std::string text;
};

/// Strips trailing format instructions ("Respond in 3 sentences.") and
/// rejects lines containing any noise phrase (case-insensitive). Returns
/// nullopt when nothing usable is left.
std::optional<std::string> clean_seed_text(std::string_view text, const std::vector<std::string>& noise_phrases);

const std::vector<std::string>& default_noise_phrases();

/// Plain text (one question per line) or JSONL with {"text", "source",
/// "split", "id"}; the format is chosen by the first non-blank character.
/// Lines that cannot be read are reported through `rejects`.
std::vector<SeedQuery> read_seed_queries(std::string_view content, SeedSource default_source, Split default_split,
                                         bool clean, std::vector<std::string>* rejects = nullptr);

/// Coverage-conditioned query: base query plus coverage query, with the
/// provenance used to generate it.
struct C2Query {
    std::string id;
    std::string source;
    std::string base_query;
    std::string coverage_query;
    TreePath background;
    IntentOp intent = IntentOp::Inclusion;
    std::string tree_id;

    std::string text() const;
};

nlohmann::json to_json(const C2Query& q);
C2Query c2_from_json(const nlohmann::json& j);

/// Keeps only the numbered listing lines of a model answer, dropping code
/// fences and surrounding prose.
std::string extract_tree_listing(std::string_view raw);

/// Asks the model for a 39-node tree. Outputs that fail parse_tree are
/// retried within the gateway's attempt budget; throws GatewayError after.
QTree decompose_tree(const std::string& base_query, const std::string& tree_id, LlmGateway& llm);

/// "base cov" joined by a single space, each side trimmed.
std::string compose_c2(std::string_view base, std::string_view cov);

/// Uniform over all 39 nodes.
TreePath select_background(const QTree& tree, std::uint64_t seed);

/// Exactly round(n * inclusion_ratio) Inclusion entries, shuffled.
std::vector<IntentOp> assign_intents(std::size_t n, double inclusion_ratio, std::uint64_t seed);

struct CoverageLint {
    std::vector<std::string> warnings;
    bool noisy() const noexcept { return !warnings.empty(); }
};

/// Soft checks: one or two sentences, and the background subtopic is
/// mentioned, i.e. the query shares a content word with the background
/// subquery that is not already part of the base query.
CoverageLint lint_coverage(std::string_view coverage_query, std::string_view background_text,
                           std::string_view base_query = {});

inline constexpr std::size_t kCoverageSamples = 5;

/// Five candidate coverage queries from one JSON-mode request.
std::vector<std::string> generate_coverage(const QTree& tree, const TreePath& background, IntentOp intent,
                                           LlmGateway& llm);

struct FinalizedC2 {
    C2Query query;
    std::size_t chosen_sample = 0;
    std::vector<Outline> candidates;  // exactly 3, in generation order
    std::vector<std::vector<std::string>> warnings;
};

struct RejectedC2 {
    /// One reason list per coverage sample tried.
    std::vector<std::vector<std::string>> reasons;
};

using FinalizeResult = std::variant<FinalizedC2, RejectedC2>;

/// Tries coverage samples in order and keeps the first whose three candidate
/// outlines all parse and validate.
FinalizeResult finalize_coverage(const std::vector<std::string>& samples, const QTree& tree, const TreePath& background,
                                 IntentOp intent, const std::string& id, const std::string& source, LlmGateway& llm);

nlohmann::json candidates_to_json(const FinalizedC2& f);

}  // namespace c2kit
