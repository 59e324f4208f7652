#include <doctest.h>

#include "c2kit/judge.hpp"
#include "testing.hpp"

using namespace c2kit;
using namespace c2kit::testing;

namespace {

JudgedOutline with_score(int s) {
    JudgedOutline j;
    j.score = s;
    return j;
}

C2Query woman_hunt_c2() {
    return {"c1", "ASQA", kWomanHuntBase, kWomanHuntCoverage, *TreePath::parse("3"), IntentOp::Exclusion, "woman-hunt"};
}

}  // namespace

TEST_CASE("rubric has five levels in ascending order") {
    const auto& levels = rubric_levels();
    CHECK(levels[0].find("entirely disregards") != std::string::npos);
    CHECK(levels[4].find("impeccable adherence") != std::string::npos);
    const auto text = render_rubric();
    for (std::size_t i = 0; i < levels.size(); ++i) {
        CHECK(text.find(std::to_string(i + 1) + ": " + levels[i]) != std::string::npos);
    }
}

TEST_CASE("parse_score") {
    CHECK(parse_score("Rationale: fine.\nScore: 4") == 4);
    CHECK(parse_score("Score: 2\nOn reflection...\nScore: 5") == 5);
    CHECK(parse_score("**Score:** 3") == 3);
    CHECK(parse_score("Score: 4/5") == 4);
    CHECK(parse_score("Score:   (1)") == 1);
    CHECK_FALSE(parse_score("Score: 0"));
    CHECK_FALSE(parse_score("Score: 6"));
    CHECK_FALSE(parse_score("Score: 3.5"));
    CHECK_FALSE(parse_score("Score: 10"));
    CHECK_FALSE(parse_score("I would give it a four."));
    CHECK_FALSE(parse_score(""));
}

TEST_CASE("parse_rationale") {
    CHECK(parse_rationale("Rationale: Covers the awards.\nScore: 4") == "Covers the awards.");
    CHECK(parse_rationale("Looks good overall.\nScore: 5") == "Looks good overall.");
}

TEST_CASE("score_outline retries until a score parses") {
    const auto tree = woman_hunt_tree();
    const auto outline = make_outline(tree, paths_of({"1", "1.1", "1.1.1", "1.1.2"}));
    auto provider = std::make_shared<ScriptedProvider>(
        std::vector<ScriptedProvider::Step>{{"I like it.", false}, {"Rationale: Avoids reviews.\nScore: 5", false}});
    LlmGateway gw(default_templates(), provider);
    gw.set_sleeper([](auto) {});

    const auto judged = score_outline(woman_hunt_c2(), outline, 2, gw);
    CHECK(judged.score == 5);
    CHECK(judged.rationale == "Avoids reviews.");
    CHECK(judged.candidate_index == 2);
    CHECK(judged.c2_id == "c1");
    CHECK(judged.judge_model == "scripted");
    CHECK(provider->calls() == 2);

    // The judge sees the C2 query, the outline and the rubric, not the tree.
    const auto& prompt = provider->prompts()[0];
    CHECK(prompt.find(kWomanHuntCoverage) != std::string::npos);
    CHECK(prompt.find(render_outline(outline)) != std::string::npos);
    CHECK(prompt.find(rubric_levels()[2]) != std::string::npos);
    CHECK(prompt.find(tree.text(*TreePath::parse("2.3.3"))) == std::string::npos);

    auto hopeless = std::make_shared<ScriptedProvider>(std::vector<ScriptedProvider::Step>(5, {"no idea", false}));
    LlmGateway gw2(default_templates(), hopeless);
    gw2.set_sleeper([](auto) {});
    CHECK_THROWS_AS(score_outline(woman_hunt_c2(), outline, 0, gw2), ScoreUnparseable);
}

TEST_CASE("rank_candidates") {
    std::vector<JudgedOutline> a = {with_score(2), with_score(4), with_score(3)};
    auto r = rank_candidates(a);
    CHECK(r.best == 1);
    CHECK(r.worst == 0);
    CHECK_FALSE(r.tie);

    std::vector<JudgedOutline> b = {with_score(4), with_score(4), with_score(1)};
    r = rank_candidates(b);
    CHECK(r.best == 0);
    CHECK(r.worst == 2);

    std::vector<JudgedOutline> c = {with_score(1), with_score(5), with_score(1)};
    r = rank_candidates(c);
    CHECK(r.worst == 0);

    std::vector<JudgedOutline> d = {with_score(3), with_score(3), with_score(3)};
    CHECK(rank_candidates(d).tie);
}

TEST_CASE("judged outlines round trip through JSON") {
    const auto tree = woman_hunt_tree();
    JudgedOutline j{"c1", 1, make_outline(tree, paths_of({"2", "2.1", "2.2", "2.3"})), 4, "ok", "m", "h"};
    const auto js = to_json(j);
    CHECK(js["paths"] == nlohmann::json::array({"2", "2.1", "2.2", "2.3"}));
    for (const char* key : {"c2_id", "candidate_index", "paths", "score", "rationale", "judge_model"}) {
        CHECK(js.contains(key));
    }
    const auto back = judged_from_json(js, tree);
    CHECK(back.outline.paths == j.outline.paths);
    CHECK(back.score == 4);

    auto bad = js;
    bad["score"] = 7;
    CHECK_THROWS(judged_from_json(bad, tree));
}
