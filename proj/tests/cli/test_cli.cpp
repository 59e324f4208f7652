#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <sys/wait.h>
#include <unistd.h>

#include "c2kit/util.hpp"
#include "testing.hpp"

namespace fs = std::filesystem;
using namespace c2kit;
using namespace c2kit::testing;

namespace {

struct Workspace {
    fs::path root;
    Workspace() : root(fs::temp_directory_path() / ("c2kit_cli_" + std::to_string(::getpid()))) {
        fs::remove_all(root);
        fs::create_directories(root);
    }
    ~Workspace() { fs::remove_all(root); }

    std::string path(const std::string& name) const { return (root / name).string(); }

    int run(const std::string& args) const {
        const std::string cmd = std::string("'") + C2KIT_CLI + "' " + args + " >>'" + path("stdout.log") + "' 2>>'" +
                                path("stderr.log") + "'";
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    void write(const std::string& name, const std::string& text) const { std::ofstream(path(name)) << text; }
};

std::size_t records(const std::string& text) {
    std::size_t n = 0;
    for (const auto& line : split_lines(text)) {
        if (!trim_copy(line).empty() && line.find("\"_header\"") == std::string::npos) ++n;
    }
    return n;
}

}  // namespace

TEST_CASE("usage errors exit with 1") {
    Workspace ws;
    CHECK(ws.run("") == 1);
    CHECK(ws.run("no-such-command") == 1);
    CHECK(ws.run("--workers 0 baseline") == 1);
    CHECK(ws.run("--help") == 0);
}

TEST_CASE("unknown config keys are rejected") {
    Workspace ws;
    ws.write("cfg.json", R"({"seed": 3, "wrokers": 2})");
    CHECK(ws.run("--config '" + ws.path("cfg.json") + "' --mock --out '" + ws.path("o") + "' baseline") == 1);
    CHECK(read_file(ws.path("stderr.log")).find("wrokers") != std::string::npos);
}

TEST_CASE("malformed seed lines are skipped and logged") {
    Workspace ws;
    ws.write("seeds.jsonl", "{\"text\": \"What is generative AI?\"}\n{\"text\": 5}\n{\"text\": \"Who wrote Hamlet?\"}\n");
    const std::string base = "--mock --log-level warn --out '" + ws.path("o") + "' ";
    CHECK(ws.run(base + "build-trees --input '" + ws.path("seeds.jsonl") + "'") == 0);
    CHECK(records(read_file(ws.path("o/trees.jsonl"))) == 2);
    CHECK(read_file(ws.path("stderr.log")).find("\"level\":\"warn\"") != std::string::npos);
}

TEST_CASE("reruns resume instead of duplicating, and foreign headers are refused") {
    Workspace ws;
    const std::string seeds = data_path("seed_queries.txt");
    const std::string base = "--mock --seed 5 --log-level error --out '" + ws.path("o") + "' ";
    REQUIRE(ws.run(base + "build-trees --input '" + seeds + "'") == 0);
    REQUIRE(ws.run(base + "baseline") == 0);
    const auto first = read_file(ws.path("o/baseline.jsonl"));
    CHECK(records(first) == 10);

    CHECK(ws.run(base + "baseline") == 0);
    CHECK(read_file(ws.path("o/baseline.jsonl")) == first);

    // A different seed changes the config hash recorded in the header.
    const std::string other = "--mock --seed 6 --log-level error --out '" + ws.path("o") + "' ";
    CHECK(ws.run(other + "baseline") == 1);
    CHECK(read_file(ws.path("o/baseline.jsonl")) == first);
    CHECK(ws.run(other + "--overwrite baseline") == 0);
    CHECK(read_file(ws.path("o/baseline.jsonl")) != first);
}

TEST_CASE("baseline outlines are deterministic across processes") {
    Workspace ws;
    const std::string seeds = data_path("seed_queries.txt");
    for (const char* dir : {"a", "b"}) {
        const std::string base = std::string("--mock --seed 9 --log-level error --out '") + ws.path(dir) + "' ";
        REQUIRE(ws.run(base + "build-trees --input '" + seeds + "'") == 0);
        REQUIRE(ws.run(base + "baseline") == 0);
    }
    CHECK(read_file(ws.path("a/baseline.jsonl")) == read_file(ws.path("b/baseline.jsonl")));
}

TEST_CASE("rag writes one record per query in each mode") {
    Workspace ws;
    const std::string base = "--mock --seed 2 --log-level error --out '" + ws.path("o") + "' ";
    REQUIRE(ws.run(base + "build-trees --input '" + data_path("seed_queries.txt") + "'") == 0);
    REQUIRE(ws.run(base + "gen-c2") == 0);
    REQUIRE(ws.run(base + "judge") == 0);
    const auto c2 = records(read_file(ws.path("o/c2.jsonl")));
    CHECK(ws.run(base + "rag --mode vanilla") == 0);
    CHECK(records(read_file(ws.path("o/rag_vanilla.jsonl"))) == c2);
    CHECK(ws.run(base + "rag --mode outline") == 1);
    CHECK(ws.run(base + "rag --mode outline --outlines '" + ws.path("o/judged.jsonl") + "'") == 0);
    const auto outline = read_file(ws.path("o/rag_outline.jsonl"));
    CHECK(records(outline) == c2);
    for (const auto& line : split_lines(outline)) {
        if (line.empty() || line.find("\"_header\"") != std::string::npos) continue;
        const auto j = nlohmann::json::parse(line);
        CHECK(j["queries"].size() == 5);
        CHECK(j["doc_urls"].size() == 10);
    }
}
