#include <doctest.h>

#include <algorithm>
#include <random>

#include "c2kit/qtree.hpp"
#include "c2kit/util.hpp"
#include "testing.hpp"

using namespace c2kit;
using namespace c2kit::testing;

namespace {

TreeError::Kind parse_error_kind(const std::string& text) {
    try {
        parse_tree(text, "base");
    } catch (const TreeError& e) {
        return e.kind();
    }
    FAIL("expected a TreeError");
    return TreeError::Kind::UnknownPath;
}

std::string replace_line(const std::string& text, const std::string& prefix, const std::string& new_line) {
    std::string out;
    for (const auto& line : split_lines(text)) {
        if (line.empty()) continue;
        out += (trim_copy(line).rfind(prefix, 0) == 0 ? new_line : line) + "\n";
    }
    return out;
}

std::set<std::string> strs(const std::vector<TreePath>& ps) {
    std::set<std::string> out;
    for (const auto& p : ps) out.insert(p.str());
    return out;
}

}  // namespace

TEST_CASE("tree paths parse strictly and order depth-first") {
    CHECK(TreePath::parse("1.2.3")->str() == "1.2.3");
    CHECK(TreePath::parse("2.")->str() == "2");
    CHECK_FALSE(TreePath::parse("0"));
    CHECK_FALSE(TreePath::parse("4"));
    CHECK_FALSE(TreePath::parse("1.2.3.1"));
    CHECK_FALSE(TreePath::parse("1..2"));
    CHECK_FALSE(TreePath::parse(""));
    CHECK_FALSE(TreePath::parse("a.b"));

    auto sorted = all_paths();
    std::shuffle(sorted.begin(), sorted.end(), std::mt19937_64(7));
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == all_paths());
    for (std::size_t i = 0; i < all_paths().size(); ++i) CHECK(all_paths()[i].dfs_index() == i);
    CHECK(TreePath{2}.dfs_index() == 13);
}

TEST_CASE("canonical tree parses with 3/9/27 nodes") {
    const QTree tree = woman_hunt_tree();
    REQUIRE(tree.nodes().size() == 39);
    int per_depth[4] = {};
    for (const auto& n : tree.nodes()) ++per_depth[n.path.depth()];
    CHECK(per_depth[1] == 3);
    CHECK(per_depth[2] == 9);
    CHECK(per_depth[3] == 27);
    CHECK(tree.text(TreePath{1, 1, 2}) == "What is the climax of The Woman Hunt?");
    CHECK(tree.text(TreePath{2, 2, 3}) == "What recurring themes appear in the director's filmography?");
    CHECK(tree.base_query() == kWomanHuntBase);
}

TEST_CASE("render is the inverse of parse") {
    const QTree tree = woman_hunt_tree();
    CHECK(render_tree(tree) == woman_hunt_text());

    // Trailing whitespace and blank lines are tolerated, and normalised away.
    std::string noisy;
    for (const auto& line : split_lines(woman_hunt_text())) noisy += line + "  \t\r\n\n";
    CHECK(render_tree(parse_tree(noisy, "b")) == woman_hunt_text());
}

TEST_CASE("render/parse round-trip on random trees") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const QTree tree = random_tree(seed);
        const QTree back = parse_tree(render_tree(tree), tree.base_query(), tree.id());
        REQUIRE(back.nodes().size() == tree.nodes().size());
        for (std::size_t i = 0; i < tree.nodes().size(); ++i) {
            CHECK(back.nodes()[i].path == tree.nodes()[i].path);
            CHECK(back.nodes()[i].text == tree.nodes()[i].text);
        }
        const QTree via_json = tree_from_json(tree_to_json(tree));
        CHECK(render_tree(via_json) == render_tree(tree));
        CHECK(via_json.id() == tree.id());
    }
}

TEST_CASE("one-word texts render as 39 numbered lines") {
    std::vector<QNode> nodes;
    for (const auto& p : all_paths()) nodes.push_back({p, "w" + std::to_string(p.dfs_index())});
    const auto rendered = render_tree(QTree("t", "b", nodes));
    CHECK(std::count(rendered.begin(), rendered.end(), '\n') == 39);
    CHECK(rendered.rfind("1. w0\n    1.1. w1\n        1.1.1. w2\n", 0) == 0);
}

TEST_CASE("parse errors") {
    CHECK(parse_error_kind("1. a\n2. b\n3. c\n") == TreeError::Kind::WrongFanout);
    CHECK(parse_error_kind("") == TreeError::Kind::WrongFanout);
    CHECK(parse_error_kind("What is this?\n") == TreeError::Kind::MalformedLine);
    CHECK(parse_error_kind("1 missing dot\n") == TreeError::Kind::MalformedLine);
    CHECK(parse_error_kind("    1.2. orphan\n") == TreeError::Kind::PathGap);
    CHECK(parse_error_kind("1. a\n  1.1. bad indent\n") == TreeError::Kind::MalformedLine);
    CHECK(parse_error_kind("4. fourth root\n") == TreeError::Kind::WrongFanout);

    const std::string dup = replace_line(woman_hunt_text(), "3.3.2.",
                                         "        3.3.2. Are there any film festivals where The Woman Hunt was highlighted?");
    CHECK(parse_error_kind(dup) == TreeError::Kind::DuplicateText);

    // Case and spacing differences still count as duplicates.
    const std::string dup_ci = replace_line(woman_hunt_text(), "3.3.2.",
                                            "        3.3.2. are there ANY film festivals  where The Woman Hunt was highlighted?");
    CHECK(parse_error_kind(dup_ci) == TreeError::Kind::DuplicateText);

    const std::string missing_leaf = replace_line(woman_hunt_text(), "2.2.3.", "");
    CHECK(parse_error_kind(missing_leaf) == TreeError::Kind::WrongFanout);

    const std::string extra_child = woman_hunt_text() + "        3.3.4. A fourth child?\n";
    CHECK(parse_error_kind(extra_child) == TreeError::Kind::WrongFanout);

    const std::string repeated = woman_hunt_text() + "        3.3.3. Again?\n";
    CHECK(parse_error_kind(repeated) == TreeError::Kind::DuplicatePath);
}

TEST_CASE("neighbors follow parent/child/sibling adjacency") {
    CHECK(strs(neighbors(TreePath{1, 1})) == std::set<std::string>{"1", "1.2", "1.3", "1.1.1", "1.1.2", "1.1.3"});
    CHECK(strs(neighbors(TreePath{2})) == std::set<std::string>{"1", "3", "2.1", "2.2", "2.3"});
    CHECK(strs(neighbors(TreePath{3, 3, 3})) == std::set<std::string>{"3.3", "3.3.1", "3.3.2"});
    CHECK_FALSE(adjacent(TreePath{1, 1, 1}, TreePath{1, 2, 1}));  // cousins
    CHECK_THROWS_AS(neighbors(TreePath{}), TreeError);
}

TEST_CASE("neighbor counts per depth and symmetry") {
    for (const auto& p : all_paths()) {
        const auto ns = neighbors(p);
        const std::size_t expected = p.depth() == 1 ? 5 : p.depth() == 2 ? 6 : 3;
        CHECK(ns.size() == expected);
        for (const auto& q : ns) {
            const auto back = neighbors(q);
            CHECK(std::find(back.begin(), back.end(), p) != back.end());
            CHECK(adjacent(p, q));
        }
    }
}
