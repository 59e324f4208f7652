#include "c2kit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "c2kit/util.hpp"

namespace c2kit {

std::vector<double> ScoreTable::values() const {
    std::vector<double> out;
    out.reserve(scores.size());
    for (const auto& [_, s] : scores) out.push_back(s);
    return out;
}

MeanSd mean_sd(std::span<const double> values) {
    if (values.size() < 2) throw StatsError(StatsError::Kind::TooFewScores, "mean/SD needs at least two scores");
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / (n - 1.0)), values.size()};
}

MeanSd mean_sd(const ScoreTable& table) {
    const auto v = table.values();
    return mean_sd(v);
}

WinTieLoss pairwise(const ScoreTable& a, const ScoreTable& b) {
    if (a.scores.size() != b.scores.size()) {
        throw StatsError(StatsError::Kind::IdMismatch, "systems " + a.system + " and " + b.system + " cover different ids");
    }
    WinTieLoss out;
    for (const auto& [id, sa] : a.scores) {
        auto it = b.scores.find(id);
        if (it == b.scores.end()) throw StatsError(StatsError::Kind::IdMismatch, "id " + id + " missing from " + b.system);
        if (sa > it->second) {
            ++out.win;
        } else if (sa == it->second) {
            ++out.tie;
        } else {
            ++out.loss;
        }
    }
    return out;
}

IntentBreakdown intent_breakdown(const ScoreTable& table, const std::map<std::string, IntentOp>& intents) {
    std::vector<double> inc, exc;
    for (const auto& [id, s] : table.scores) {
        auto it = intents.find(id);
        if (it == intents.end()) throw StatsError(StatsError::Kind::MissingIntent, "no intent for id " + id);
        (it->second == IntentOp::Inclusion ? inc : exc).push_back(s);
    }
    IntentBreakdown out;
    out.inclusion_n = inc.size();
    out.exclusion_n = exc.size();
    if (inc.size() >= 2) out.inclusion = mean_sd(inc);
    if (exc.size() >= 2) out.exclusion = mean_sd(exc);
    return out;
}

McNemarResult mcnemar_exact(const Contingency& t) {
    const std::uint64_t n = t.b + t.c;
    if (n == 0) throw StatsError(StatsError::Kind::NoDiscordantPairs, "McNemar test needs discordant pairs");
    const std::uint64_t k = std::min(t.b, t.c);

    // log P(X <= k) for X ~ Binomial(n, 1/2), via log-sum-exp over the terms.
    const double dn = static_cast<double>(n);
    const double log_half_n = -dn * std::log(2.0);
    std::vector<double> terms;
    terms.reserve(k + 1);
    for (std::uint64_t i = 0; i <= k; ++i) {
        const double di = static_cast<double>(i);
        terms.push_back(std::lgamma(dn + 1.0) - std::lgamma(di + 1.0) - std::lgamma(dn - di + 1.0) + log_half_n);
    }
    const double peak = *std::max_element(terms.begin(), terms.end());
    double sum = 0.0;
    for (double term : terms) sum += std::exp(term - peak);
    const double log_tail = peak + std::log(sum);
    const double p = std::min(1.0, std::exp(std::log(2.0) + log_tail));
    return {k, p};
}

double pearson_r(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 3) {
        throw StatsError(StatsError::Kind::BadInput, "pearson_r needs equal-length inputs of at least 3 values");
    }
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) throw StatsError(StatsError::Kind::DegenerateVariance, "zero variance input");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<ScoreTable> read_score_jsonl(std::string_view content) {
    std::vector<ScoreTable> tables;
    std::size_t line_no = 0;
    for (const auto& line : split_lines(content)) {
        ++line_no;
        if (trim_copy(line).empty()) continue;
        const auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw StatsError(StatsError::Kind::BadInput, "score line " + std::to_string(line_no) + " is not JSON");
        }
        if (j.contains("_header")) continue;
        const auto system = j.at("system").get<std::string>();
        const auto id = j.at("c2_id").get<std::string>();
        const int score = j.at("score").get<int>();
        if (score < 1 || score > 5) {
            throw StatsError(StatsError::Kind::BadInput, "score out of range on line " + std::to_string(line_no));
        }
        auto it = std::find_if(tables.begin(), tables.end(), [&](const ScoreTable& t) { return t.system == system; });
        if (it == tables.end()) {
            tables.push_back({system, {}});
            it = std::prev(tables.end());
        }
        if (!it->scores.emplace(id, score).second) {
            throw StatsError(StatsError::Kind::BadInput, "duplicate id " + id + " for system " + system);
        }
    }
    return tables;
}

std::vector<Contingency> read_contingency_csv(std::string_view content) {
    std::vector<Contingency> out;
    for (const auto& raw : split_lines(content)) {
        const auto line = trim_copy(raw);
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(trim_copy(cell));
        if (cells.size() != 5) throw StatsError(StatsError::Kind::BadInput, "contingency row needs 5 columns: " + line);
        if (to_lower(cells[1]) == "a") continue;  // header
        try {
            out.push_back({cells[0], std::stoull(cells[1]), std::stoull(cells[2]), std::stoull(cells[3]), std::stoull(cells[4])});
        } catch (const std::exception&) {
            throw StatsError(StatsError::Kind::BadInput, "bad counts in contingency row: " + line);
        }
    }
    return out;
}

namespace {

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

}  // namespace

std::string format_p_short(double p) {
    return p < 0.001 ? "< 0.001" : fixed(p, 3);
}

std::string format_p(double p) {
    return p < 0.0001 ? "< 0.0001" : fixed(p, 4);
}

std::string render_report(const ReportInputs& in) {
    std::ostringstream md;
    md << "# Evaluation report\n";

    if (!in.systems.empty()) {
        md << "\n## Outline scores\n\n"
           << "| System | N | Mean | SD |\n"
           << "|---|---:|---:|---:|\n";
        for (const auto& t : in.systems) {
            if (t.scores.size() < 2) {
                md << "| " << t.system << " | " << t.scores.size() << " | - | - |\n";
                continue;
            }
            const auto ms = mean_sd(t);
            md << "| " << t.system << " | " << ms.n << " | " << fixed(ms.mean, 2) << " | " << fixed(ms.sd, 2) << " |\n";
        }
    }

    if (!in.comparisons.empty()) {
        md << "\n## Pairwise comparison\n\n"
           << "| System A | System B | Win | Tie | Loss |\n"
           << "|---|---|---:|---:|---:|\n";
        const auto find = [&](const std::string& name) -> const ScoreTable& {
            for (const auto& t : in.systems) {
                if (t.system == name) return t;
            }
            throw StatsError(StatsError::Kind::BadInput, "unknown system " + name);
        };
        for (const auto& [a, b] : in.comparisons) {
            const auto w = pairwise(find(a), find(b));
            md << "| " << a << " | " << b << " | " << w.win << " | " << w.tie << " | " << w.loss << " |\n";
        }
    }

    if (!in.intents.empty() && !in.systems.empty()) {
        md << "\n## Scores by intent operation\n\n| |";
        for (const auto& t : in.systems) md << " " << t.system << " Inclusion | " << t.system << " Exclusion |";
        md << "\n|---|";
        for (std::size_t i = 0; i < in.systems.size(); ++i) md << "---:|---:|";
        std::vector<IntentBreakdown> rows;
        for (const auto& t : in.systems) rows.push_back(intent_breakdown(t, in.intents));
        const auto cell = [](const std::optional<MeanSd>& m, bool sd) {
            return m ? fixed(sd ? m->sd : m->mean, 2) : std::string("-");
        };
        md << "\n| Mean |";
        for (const auto& r : rows) md << " " << cell(r.inclusion, false) << " | " << cell(r.exclusion, false) << " |";
        md << "\n| SD |";
        for (const auto& r : rows) md << " " << cell(r.inclusion, true) << " | " << cell(r.exclusion, true) << " |";
        md << "\n";
    }

    if (!in.contingencies.empty()) {
        md << "\n## McNemar tests (exact)\n\n"
           << "| Comparison | a | b | c | d | Total | Statistic | p |\n"
           << "|---|---:|---:|---:|---:|---:|---:|---:|\n";
        std::vector<McNemarResult> results;
        for (const auto& t : in.contingencies) {
            results.push_back(mcnemar_exact(t));
            md << "| " << t.label << " | " << t.a << " | " << t.b << " | " << t.c << " | " << t.d << " | " << t.total()
               << " | " << results.back().statistic << " | " << format_p(results.back().p) << " |\n";
        }
        md << "\n";
        for (std::size_t i = 0; i < results.size(); ++i) {
            md << "- " << in.contingencies[i].label << ": statistic " << results[i].statistic << ", p "
               << format_p_short(results[i].p) << "\n";
        }
    }
    return md.str();
}

}  // namespace c2kit
