#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "c2kit/c2.hpp"
#include "c2kit/llm_gateway.hpp"
#include "c2kit/outline.hpp"

namespace c2kit {

/// Five-point Likert rubric for instruction adherence, level 1 first.
const std::array<std::string, 5>& rubric_levels();
std::string render_rubric();

struct JudgedOutline {
    std::string c2_id;
    std::size_t candidate_index = 0;
    Outline outline;
    int score = 0;
    std::string rationale;
    std::string judge_model;
    std::string request_hash;
};

nlohmann::json to_json(const JudgedOutline& j);
JudgedOutline judged_from_json(const nlohmann::json& j, const QTree& tree);

/// Last "Score:" followed by an integer in 1..5. Markdown emphasis around the
/// label and suffixes like "/5" are tolerated.
std::optional<int> parse_score(std::string_view raw);

/// Text after "Rationale:" up to the score line, or the whole text before it.
std::string parse_rationale(std::string_view raw);

class ScoreUnparseable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Throws ScoreUnparseable once the gateway budget is spent on outputs
/// without a valid score.
JudgedOutline score_outline(const C2Query& c2, const Outline& outline, std::size_t candidate_index, LlmGateway& llm);

struct Ranking {
    std::size_t best = 0;   // index into the judged list
    std::size_t worst = 0;
    bool tie = false;       // max score == min score
};

/// Ties on the max go to the earliest candidate; ties on the min to the
/// earliest as well.
Ranking rank_candidates(std::span<const JudgedOutline> judged);

}  // namespace c2kit
