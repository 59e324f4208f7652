#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "c2kit/outline.hpp"

namespace c2kit {

class StatsError : public std::invalid_argument {
public:
    enum class Kind { TooFewScores, IdMismatch, MissingIntent, NoDiscordantPairs, DegenerateVariance, BadInput };

    StatsError(Kind kind, const std::string& what) : std::invalid_argument(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

/// Scores for one system keyed by C2 id.
struct ScoreTable {
    std::string system;
    std::map<std::string, int> scores;

    std::vector<double> values() const;
};

struct MeanSd {
    double mean = 0.0;
    double sd = 0.0;  // sample (n - 1) standard deviation
    std::size_t n = 0;
};

MeanSd mean_sd(std::span<const double> values);
MeanSd mean_sd(const ScoreTable& table);

struct WinTieLoss {
    std::size_t win = 0;
    std::size_t tie = 0;
    std::size_t loss = 0;
};

/// Per shared id, compares a's score with b's. Id sets must match.
WinTieLoss pairwise(const ScoreTable& a, const ScoreTable& b);

struct IntentBreakdown {
    std::optional<MeanSd> inclusion;  // absent when the bucket has < 2 scores
    std::optional<MeanSd> exclusion;
    std::size_t inclusion_n = 0;
    std::size_t exclusion_n = 0;
};

IntentBreakdown intent_breakdown(const ScoreTable& table, const std::map<std::string, IntentOp>& intents);

/// 2x2 paired outcome counts. Rows: system X unsatisfactory / satisfactory;
/// columns: system Y unsatisfactory / satisfactory.
struct Contingency {
    std::string label;
    std::uint64_t a = 0;  // both unsatisfactory
    std::uint64_t b = 0;  // X unsatisfactory, Y satisfactory
    std::uint64_t c = 0;  // X satisfactory, Y unsatisfactory
    std::uint64_t d = 0;  // both satisfactory

    std::uint64_t total() const noexcept { return a + b + c + d; }
};

struct McNemarResult {
    std::uint64_t statistic = 0;  // min(b, c)
    double p = 1.0;               // exact two-sided binomial, clamped at 1
};

/// Exact McNemar test evaluated in log space, safe for large counts.
McNemarResult mcnemar_exact(const Contingency& t);

double pearson_r(std::span<const double> x, std::span<const double> y);

/// Score JSONL rows {"c2_id", "system", "score"} grouped by system, in order
/// of first appearance.
std::vector<ScoreTable> read_score_jsonl(std::string_view content);

/// CSV with columns label,a,b,c,d; a header row is optional.
std::vector<Contingency> read_contingency_csv(std::string_view content);

/// "p < 0.001" below a thousandth, otherwise three decimals.
std::string format_p_short(double p);
/// Four decimals, "< 0.0001" below that.
std::string format_p(double p);

struct ReportInputs {
    std::vector<ScoreTable> systems;
    std::map<std::string, IntentOp> intents;       // optional; enables the intent table
    std::vector<std::pair<std::string, std::string>> comparisons;  // system pairs for win/tie/loss
    std::vector<Contingency> contingencies;
};

/// Markdown report with mean/SD, pairwise, intent and McNemar sections.
std::string render_report(const ReportInputs& in);

}  // namespace c2kit
