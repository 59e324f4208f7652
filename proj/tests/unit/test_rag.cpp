#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <unistd.h>

#include "c2kit/mock_llm.hpp"
#include "c2kit/rag.hpp"
#include "testing.hpp"

using namespace c2kit;
using namespace c2kit::testing;

namespace {

SearchHit hit(const std::string& url, const std::string& body = "Some body text.") {
    return {url, "title " + url, body};
}

class ThrowingSearch : public SearchClient {
public:
    std::vector<SearchHit> search(const std::string& query, std::size_t k) override {
        if (query == "boom") throw SearchError("quota exceeded");
        return MockSearchClient().search(query, k);
    }
};

}  // namespace

TEST_CASE("search plans have a ten document budget") {
    const auto tree = woman_hunt_tree();
    const auto outline = make_outline(tree, paths_of({"1", "1.1", "1.2", "1.3"}));
    const std::string c2 = kWomanHuntBase + " " + kWomanHuntCoverage;

    const auto vanilla = plan_searches(c2, nullptr);
    CHECK(vanilla.mode == RagMode::Vanilla);
    CHECK(vanilla.queries == std::vector<std::string>{c2});
    CHECK(vanilla.per_query_k == 10);
    CHECK(vanilla.budget() == kDocumentBudget);

    const auto guided = plan_searches(c2, &outline);
    CHECK(guided.mode == RagMode::Outline);
    REQUIRE(guided.queries.size() == 5);
    for (std::size_t i = 0; i < 4; ++i) CHECK(guided.queries[i] == outline.texts[i]);
    CHECK(guided.queries[4] == c2);
    CHECK(guided.per_query_k == 2);
    CHECK(guided.budget() == kDocumentBudget);

    CHECK_THROWS(plan_searches(c2, RagMode::Outline, nullptr));
    CHECK_THROWS(plan_searches(c2, RagMode::Vanilla, &outline));
}

TEST_CASE("execute_plan drops URLs seen earlier and records shortfalls") {
    FixtureSearchClient fixtures({{"q1", {hit("u1"), hit("u2"), hit("u3")}},
                                  {"q2", {hit("u2"), hit("u4")}},
                                  {"q3", {hit("u5")}}});
    RagPlan plan{RagMode::Outline, {"q1", "q2", "q3", "missing"}, 2};
    const auto r = execute_plan(plan, fixtures);
    std::vector<std::string> urls;
    for (const auto& d : r.docs) urls.push_back(d.url);
    CHECK(urls == std::vector<std::string>{"u1", "u2", "u4", "u5"});
    CHECK(r.duplicates_dropped == 1);
    CHECK(r.docs[2].rank == 2);
    CHECK(r.docs[2].query_used == "q2");
    REQUIRE(r.shortfalls.size() == 3);
    CHECK(r.shortfalls[0].query == "q2");
    CHECK(r.shortfalls[0].received == 1);
    CHECK(r.shortfalls[2].query == "missing");
    CHECK(r.shortfalls[2].received == 0);
}

TEST_CASE("search errors do not stop the remaining queries") {
    ThrowingSearch search;
    RagPlan plan{RagMode::Outline, {"alpha", "boom", "gamma"}, 2};
    const auto r = execute_plan(plan, search);
    CHECK(r.docs.size() == 4);
    REQUIRE(r.errors.size() == 1);
    CHECK(r.errors[0].find("quota exceeded") != std::string::npos);
}

TEST_CASE("lexical answerability is a Jaccard ratio of content words") {
    LexicalScorer s;
    CHECK(s.score("glacier melting arctic", "The glacier is melting in the arctic ice.") == doctest::Approx(0.75));
    CHECK(s.score("glacier melting arctic", "A glacier hike near volcano deserts.") ==
          doctest::Approx(1.0 / 7.0));
    CHECK(s.score("the of and", "glacier") == 0.0);
    CHECK(s.score("Glacier", "glacier") == 1.0);
}

TEST_CASE("split_passages") {
    CHECK(split_passages("One.\n\nTwo\nlines.\n\n\n  \nThree.") == std::vector<std::string>{"One.", "Two\nlines.", "Three."});
    CHECK(split_passages("   \n\n").empty());

    const std::string blob(1200, 'x');
    const auto windows = split_passages(blob);
    REQUIRE(windows.size() == 3);
    CHECK(windows[0].size() == 512);
    CHECK(windows[1].size() == 512);
    CHECK(windows[2].size() == 1200 - 768);
    // Every character is covered and consecutive windows overlap by 128.
    std::string digits;
    for (int i = 0; i < 1200; ++i) digits += static_cast<char>('a' + i % 26);
    const auto w = split_passages(digits);
    CHECK(w[1].substr(0, 128) == w[0].substr(384));
    CHECK(w[2].substr(0, 128) == w[1].substr(384));
    CHECK(w.back().back() == digits.back());
}

TEST_CASE("evidence takes the top passage from each document") {
    std::vector<SearchDoc> docs = {
        {"glacier melting", 1, "u1", "t", "Cooking pasta at home.\n\nGlacier melting accelerates."},
        {"volcano", 2, "u2", "t", ""},
        {"volcano eruption", 1, "u3", "t", "Volcano eruption history.\n\nUnrelated footer."},
    };
    const auto sel = select_evidence(docs, LexicalScorer());
    REQUIRE(sel.passages.size() == 2);
    CHECK(sel.passages[0].passage == "Glacier melting accelerates.");
    CHECK(sel.passages[0].paired_query == "glacier melting");
    CHECK(sel.passages[1].url == "u3");
    CHECK(sel.passages[1].doc_index == 2);
    REQUIRE(sel.warnings.size() == 1);
    CHECK(sel.warnings[0].find("u2") != std::string::npos);
}

TEST_CASE("response prompts differ only in the content draft") {
    const auto tree = woman_hunt_tree();
    const auto outline = make_outline(tree, paths_of({"1", "1.1", "1.2", "1.3"}));
    const std::vector<EvidencePassage> ev = {{0, "u1", "Passage one.", 0.5, "q"}, {1, "u2", "Passage two.", 0.4, "q"}};

    const auto vanilla = response_request("What is AI?", nullptr, ev);
    const auto guided = response_request("What is AI?", &outline, ev);
    CHECK(vanilla.template_name == "rag_respond");
    CHECK(vanilla.slots.at("outline") == "No content draft is provided.");
    CHECK(guided.slots.at("outline").find(outline.texts[2]) != std::string::npos);
    auto a = vanilla.slots;
    auto b = guided.slots;
    a.erase("outline");
    b.erase("outline");
    CHECK(a == b);
    const auto evidence = render_evidence(ev);
    CHECK(evidence == "[1] Passage one.\n\n[2] Passage two.");

    LlmGateway gw(default_templates(), std::make_shared<MockProvider>(synthetic_responder()));
    CHECK_THROWS(generate_response("What is AI?", nullptr, {}, gw));
}

TEST_CASE("run_rag end to end with the mock search and model") {
    const auto tree = woman_hunt_tree();
    const auto outline = make_outline(tree, paths_of({"1", "1.1", "1.2", "1.3"}));
    C2Query c2{"c1", "ASQA", kWomanHuntBase, kWomanHuntCoverage, *TreePath::parse("3"), IntentOp::Exclusion, "wh"};
    MockSearchClient search;
    LlmGateway gw(default_templates(), std::make_shared<MockProvider>(synthetic_responder()));

    const auto v = run_rag(c2, RagMode::Vanilla, nullptr, search, LexicalScorer(), gw);
    CHECK(v.execution.docs.size() == 10);
    CHECK(v.evidence.passages.size() == 10);
    CHECK(v.response_markdown.find("## ") != std::string::npos);

    const auto o = run_rag(c2, RagMode::Outline, &outline, search, LexicalScorer(), gw);
    CHECK(o.execution.docs.size() == 10);
    const auto j = to_json(o);
    CHECK(j["mode"] == "outline");
    CHECK(j["queries"].size() == 5);
    CHECK(j["doc_urls"].size() == 10);
}

TEST_CASE("fixture search client loads files and directories") {
    const auto dir = std::filesystem::temp_directory_path() / ("c2kit_rag_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    {
        std::ofstream(dir / "a.json") << R"({"q1": [{"url": "u1", "title": "t1", "body": "b1"}]})";
        std::ofstream(dir / "b.json") << R"({"q2": [{"url": "u2", "title": "t2", "body": "b2"},
                                                    {"url": "u3", "title": "t3", "body": "b3"}]})";
    }
    auto all = FixtureSearchClient::from_path(dir.string());
    CHECK(all->search("q1", 5).size() == 1);
    CHECK(all->search("q2", 1).size() == 1);
    CHECK(all->search("q2", 1)[0].url == "u2");
    CHECK(all->search("nothing", 3).empty());

    auto one = FixtureSearchClient::from_path((dir / "a.json").string());
    CHECK(one->search("q2", 5).empty());
    std::filesystem::remove_all(dir);
}
