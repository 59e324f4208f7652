#include <doctest.h>

#include <cmath>
#include <random>

#include "c2kit/stats.hpp"
#include "c2kit/util.hpp"
#include "testing.hpp"

using namespace c2kit;
using namespace c2kit::testing;

namespace {

ScoreTable table(const std::string& system, const std::vector<int>& scores) {
    ScoreTable t{system, {}};
    for (std::size_t i = 0; i < scores.size(); ++i) t.scores["id" + std::to_string(1000 + i)] = scores[i];
    return t;
}

/// Exact two-sided binomial tail with integer arithmetic.
double mcnemar_oracle(unsigned b, unsigned c) {
    const unsigned n = b + c;
    const unsigned k = std::min(b, c);
    unsigned __int128 tail = 0;
    unsigned __int128 binom = 1;  // C(n, i)
    for (unsigned i = 0; i <= k; ++i) {
        if (i > 0) binom = binom * (n - i + 1) / i;
        tail += binom;
    }
    const unsigned __int128 total = static_cast<unsigned __int128>(1) << n;
    if (2 * tail >= total) return 1.0;
    return static_cast<double>(static_cast<long double>(2 * tail) / static_cast<long double>(total));
}

}  // namespace

TEST_CASE("mean_sd uses the sample standard deviation") {
    const std::vector<double> flat = {3, 3, 3, 3};
    auto ms = mean_sd(flat);
    CHECK(ms.mean == 3.0);
    CHECK(ms.sd == 0.0);

    const std::vector<double> two = {1, 5};
    ms = mean_sd(two);
    CHECK(ms.mean == 3.0);
    CHECK(ms.sd == doctest::Approx(std::sqrt(8.0)).epsilon(1e-12));

    const std::vector<double> one = {4};
    CHECK_THROWS_AS(mean_sd(one), StatsError);
    try {
        mean_sd(one);
    } catch (const StatsError& e) {
        CHECK(e.kind() == StatsError::Kind::TooFewScores);
    }
}

TEST_CASE("mean_sd is shift invariant in sd") {
    std::mt19937_64 gen(5);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> xs(2 + gen() % 50);
        for (auto& x : xs) x = 1 + static_cast<double>(gen() % 5);
        std::vector<double> shifted = xs;
        const double c = static_cast<double>(gen() % 7) - 3.0;
        for (auto& x : shifted) x += c;
        const auto a = mean_sd(xs);
        const auto b = mean_sd(shifted);
        CHECK(b.mean == doctest::Approx(a.mean + c).epsilon(1e-12));
        CHECK(b.sd == doctest::Approx(a.sd).epsilon(1e-9));
    }
}

TEST_CASE("pairwise counts wins, ties and losses") {
    auto w = pairwise(table("A", {4, 3, 2}), table("B", {3, 3, 3}));
    CHECK(w.win == 1);
    CHECK(w.tie == 1);
    CHECK(w.loss == 1);

    w = pairwise(table("A", {1, 2, 5}), table("A2", {1, 2, 5}));
    CHECK(w.tie == 3);

    ScoreTable a = table("A", {1, 2});
    ScoreTable b = a;
    b.scores.erase(b.scores.begin());
    b.scores["other"] = 3;
    CHECK_THROWS_AS(pairwise(a, b), StatsError);
    b.scores.erase("other");
    CHECK_THROWS_AS(pairwise(a, b), StatsError);
}

TEST_CASE("pairwise against itself plus one") {
    std::mt19937_64 gen(11);
    std::vector<int> base(1000), plus(1000);
    std::size_t below_five = 0;
    for (std::size_t i = 0; i < base.size(); ++i) {
        base[i] = 1 + static_cast<int>(gen() % 5);
        plus[i] = std::min(5, base[i] + 1);
        if (base[i] < 5) ++below_five;
    }
    const auto a = table("A", base);
    const auto b = table("B", plus);
    const auto w = pairwise(a, b);
    CHECK(w.loss == below_five);
    CHECK(w.tie == 1000 - below_five);
    CHECK(w.win == 0);
    const auto r = pairwise(b, a);
    CHECK(r.win == w.loss);
    CHECK(r.loss == w.win);
}

TEST_CASE("intent breakdown") {
    ScoreTable t{"S", {{"a", 4}, {"b", 4}, {"c", 2}, {"d", 2}}};
    std::map<std::string, IntentOp> intents = {{"a", IntentOp::Inclusion},
                                               {"b", IntentOp::Inclusion},
                                               {"c", IntentOp::Exclusion},
                                               {"d", IntentOp::Exclusion}};
    auto r = intent_breakdown(t, intents);
    REQUIRE(r.inclusion);
    REQUIRE(r.exclusion);
    CHECK(r.inclusion->mean == 4.0);
    CHECK(r.inclusion->sd == 0.0);
    CHECK(r.exclusion->mean == 2.0);
    CHECK(r.exclusion->sd == 0.0);

    for (auto& [_, op] : intents) op = IntentOp::Inclusion;
    r = intent_breakdown(t, intents);
    CHECK(r.inclusion);
    CHECK_FALSE(r.exclusion);
    CHECK(r.exclusion_n == 0);

    intents.erase("d");
    CHECK_THROWS_AS(intent_breakdown(t, intents), StatsError);
}

TEST_CASE("McNemar on the published contingency tables") {
    const auto vanilla = mcnemar_exact({"vanilla", 179, 606, 60, 155});
    CHECK(vanilla.statistic == 60);
    CHECK(vanilla.p < 0.001);
    // Reference value from an independent exact binomial computation.
    CHECK(vanilla.p == doctest::Approx(1.44e-114).epsilon(0.01));

    const auto sft = mcnemar_exact({"sft", 130, 271, 207, 392});
    CHECK(sft.statistic == 207);
    CHECK(std::abs(sft.p - 0.004) <= 0.0005);
    CHECK(sft.p == doctest::Approx(0.0039111).epsilon(1e-4));
    CHECK(format_p(sft.p) == "0.0039");
    CHECK(format_p_short(sft.p) == "0.004");
    CHECK(format_p_short(vanilla.p) == "< 0.001");

    const auto sym = mcnemar_exact({"sym", 0, 5, 5, 0});
    CHECK(sym.statistic == 5);
    CHECK(sym.p == 1.0);

    CHECK_THROWS_AS(mcnemar_exact({"none", 10, 0, 0, 10}), StatsError);
}

TEST_CASE("McNemar matches the integer oracle for every table with b + c <= 30") {
    for (unsigned n = 1; n <= 30; ++n) {
        for (unsigned b = 0; b <= n; ++b) {
            const unsigned c = n - b;
            const auto got = mcnemar_exact({"", 0, b, c, 0});
            const double want = mcnemar_oracle(b, c);
            CHECK(got.statistic == std::min(b, c));
            CHECK(got.p == doctest::Approx(want).epsilon(1e-10));
        }
    }
}

TEST_CASE("McNemar is symmetric and monotone in the imbalance") {
    for (unsigned n = 1; n <= 200; n += 7) {
        double previous = 2.0;
        for (unsigned b = n / 2 + n % 2; b <= n; ++b) {
            const unsigned c = n - b;
            const auto p = mcnemar_exact({"", 0, b, c, 0}).p;
            CHECK(p == mcnemar_exact({"", 0, c, b, 0}).p);
            CHECK(p <= previous);
            previous = p;
        }
    }
}

TEST_CASE("pearson_r") {
    const std::vector<double> x = {1, 2, 3, 4};
    const std::vector<double> y = {2, 1, 4, 3};
    CHECK(pearson_r(x, y) == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(pearson_r(x, x) == doctest::Approx(1.0));
    const std::vector<double> neg = {-1, -2, -3, -4};
    CHECK(pearson_r(x, neg) == doctest::Approx(-1.0));

    const std::vector<double> flat = {2, 2, 2, 2};
    try {
        pearson_r(x, flat);
        FAIL("expected DegenerateVariance");
    } catch (const StatsError& e) {
        CHECK(e.kind() == StatsError::Kind::DegenerateVariance);
    }
    const std::vector<double> shorter = {1, 2};
    CHECK_THROWS_AS(pearson_r(shorter, shorter), StatsError);
}

TEST_CASE("score and contingency readers") {
    const auto tables = read_score_jsonl(
        "{\"_header\":{\"schema\":\"scores/1\"}}\n"
        "{\"c2_id\":\"a\",\"system\":\"X\",\"score\":3}\n"
        "{\"c2_id\":\"b\",\"system\":\"X\",\"score\":5}\n"
        "\n"
        "{\"c2_id\":\"a\",\"system\":\"Y\",\"score\":1}\n");
    REQUIRE(tables.size() == 2);
    CHECK(tables[0].system == "X");
    CHECK(tables[0].scores.size() == 2);
    CHECK(tables[1].scores.at("a") == 1);

    CHECK_THROWS_AS(read_score_jsonl("{\"c2_id\":\"a\",\"system\":\"X\",\"score\":6}\n"), StatsError);
    CHECK_THROWS_AS(read_score_jsonl("{\"c2_id\":\"a\",\"system\":\"X\",\"score\":2}\n"
                                     "{\"c2_id\":\"a\",\"system\":\"X\",\"score\":3}\n"),
                    StatsError);

    const auto rows = read_contingency_csv(read_file(data_path("paper_contingency.csv")));
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].b == 606);
    CHECK(rows[0].c == 60);
    CHECK(rows[1].total() == 1000);
    CHECK_THROWS_AS(read_contingency_csv("x,1,2,3\n"), StatsError);
}

TEST_CASE("report renders the published tables from the score fixtures") {
    ReportInputs in;
    in.systems = read_score_jsonl(read_file(data_path("paper_scores.jsonl")));
    in.contingencies = read_contingency_csv(read_file(data_path("paper_contingency.csv")));
    const auto md = render_report(in);
    CHECK(md.find("| Random | 300 | 2.57 | 1.44 |") != std::string::npos);
    CHECK(md.find("| SFT-QPlanner | 300 | 2.79 | 1.40 |") != std::string::npos);
    CHECK(md.find("| DPO-QPlanner-SynNeg | 300 | 2.98 | 1.39 |") != std::string::npos);
    CHECK(md.find("| DPO-QPlanner-Combined | 300 | 3.01 | 1.36 |") != std::string::npos);
    CHECK(md.find("| DPO-QPlanner | 300 | 3.16 | 1.33 |") != std::string::npos);
    CHECK(md.find("statistic 60, p < 0.001") != std::string::npos);
    CHECK(md.find("statistic 207, p 0.004") != std::string::npos);

    ReportInputs by_intent;
    by_intent.systems = read_score_jsonl(read_file(data_path("paper_intent_scores.jsonl")));
    for (const auto& line : split_lines(read_file(data_path("paper_intents.jsonl")))) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line);
        by_intent.intents[j["id"]] = intent_from_string(j["intent"].get<std::string>());
    }
    const auto md2 = render_report(by_intent);
    CHECK(md2.find("| Mean | 2.85 | 2.74 | 3.22 | 3.10 |") != std::string::npos);
    CHECK(md2.find("| SD | 1.23 | 1.55 | 1.15 | 1.47 |") != std::string::npos);
}
