#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

using namespace c2kit::cli;

int main(int argc, char** argv) {
    CLI::App app{"c2kit: coverage-conditioned query datasets, outline planning data and outline-guided RAG"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::string config_path, replay, journal, out_dir, log_level, fixtures;
    std::uint64_t seed = 0;
    std::size_t workers = 0;
    bool mock = false, overwrite = false;
    auto* o_config = app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    auto* o_seed = app.add_option("--seed", seed, "Random seed recorded in every output header");
    auto* o_workers = app.add_option("--workers", workers, "Parallel workers per command")->check(CLI::PositiveNumber);
    auto* o_replay = app.add_option("--replay-journal", replay, "Serve model responses from a recorded journal");
    auto* o_mock = app.add_flag("--mock", mock, "Use the offline synthetic model and search");
    auto* o_journal = app.add_option("--journal", journal, "Append every model response to this JSONL journal");
    auto* o_out = app.add_option("--out", out_dir, "Output directory (default: out)");
    auto* o_log = app.add_option("--log-level", log_level, "debug, info, warn or error");
    auto* o_fixtures = app.add_option("--search-fixtures", fixtures, "Canned search results (file or directory)");
    auto* o_overwrite = app.add_flag("--overwrite", overwrite, "Replace outputs written with another configuration");

    BuildTreesOptions bt;
    bool no_clean = false;
    auto* build = app.add_subcommand("build-trees", "Decompose seed queries into 39-node subquery trees");
    build->add_option("--input", bt.input, "Seed queries: plain text or JSONL")->required()->check(CLI::ExistingFile);
    build->add_option("--source", bt.source, "Default seed source (asqa, longform, expertqa)");
    build->add_option("--split", bt.split, "Default split (train, test)");
    build->add_flag("--no-clean", no_clean, "Keep seed text as given");

    GenC2Options gc;
    auto* gen = app.add_subcommand("gen-c2", "Generate coverage queries and candidate outlines");
    gen->add_option("--trees", gc.trees, "Tree JSONL (default: <out>/trees.jsonl)");

    JudgeOptions jo;
    auto* judge = app.add_subcommand("judge", "Score candidate outlines with the judge model");
    judge->add_option("--trees", jo.trees, "Tree JSONL");
    judge->add_option("--c2", jo.c2, "C2 query JSONL");
    judge->add_option("--candidates", jo.candidates, "Candidate outline JSONL");
    judge->add_option("--outlines", jo.outlines, "Score one outline per query from this file instead");
    judge->add_option("--system", jo.system, "System name for --outlines scores");

    ExportOptions eo;
    auto* exp = app.add_subcommand("export", "Write SFT and DPO training data");
    exp->add_option("--trees", eo.trees, "Tree JSONL");
    exp->add_option("--c2", eo.c2, "C2 query JSONL");
    exp->add_option("--candidates", eo.candidates, "Candidate outline JSONL");
    exp->add_option("--judged", eo.judged, "Judged outline JSONL");

    BaselineOptions bo;
    auto* base = app.add_subcommand("baseline", "Draw random-walk outlines");
    base->add_option("--trees", bo.trees, "Tree JSONL");
    base->add_option("--c2", bo.c2, "One outline per C2 query instead of per tree");

    RagOptions ro;
    auto* rag = app.add_subcommand("rag", "Search, select evidence and write responses");
    rag->add_option("--trees", ro.trees, "Tree JSONL");
    rag->add_option("--c2", ro.c2, "C2 query JSONL");
    rag->add_option("--mode", ro.mode, "vanilla or outline");
    rag->add_option("--outlines", ro.outlines, "Judged or outline JSONL (outline mode)");

    StatsOptions so;
    auto* stats = app.add_subcommand("stats", "Render the evaluation report");
    stats->add_option("--scores", so.scores, "Score JSONL files {c2_id, system, score}");
    stats->add_option("--intents", so.intents, "JSONL with id and intent per query");
    stats->add_option("--contingency", so.contingency, "CSV label,a,b,c,d");
    stats->add_option("--compare", so.compare, "System pair A:B for win/tie/loss");
    stats->add_option("--report", so.report, "Report path (default: <out>/report.md)");

    for (auto* sub : {build, gen, judge, exp, base, rag, stats}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    Logger bootstrap;
    try {
        PipelineConfig cfg;
        if (*o_config) apply_config_file(cfg, config_path);
        if (*o_seed) cfg.seed = seed;
        if (*o_workers) cfg.workers = workers;
        if (*o_replay) cfg.replay_journal = replay;
        if (*o_mock) cfg.mock = mock;
        if (*o_journal) cfg.journal = journal;
        if (*o_out) cfg.out_dir = out_dir;
        if (*o_log) cfg.log_level = log_level;
        if (*o_fixtures) cfg.search_fixtures = fixtures;
        if (*o_overwrite) cfg.overwrite = overwrite;
        if (cfg.intent_ratio < 0.0 || cfg.intent_ratio > 1.0) throw ConfigError("intent_ratio must be in [0, 1]");
        bt.clean = !no_clean;

        Logger log(log_level_from_string(cfg.log_level));
        log.debug("config", {{"config_hash", cfg.hash()}, {"effective", cfg.hashed()}});

        if (*build) return cmd_build_trees(cfg, bt, log);
        if (*gen) return cmd_gen_c2(cfg, gc, log);
        if (*judge) return cmd_judge(cfg, jo, log);
        if (*exp) return cmd_export(cfg, eo, log);
        if (*base) return cmd_baseline(cfg, bo, log);
        if (*rag) return cmd_rag(cfg, ro, log);
        if (*stats) return cmd_stats(cfg, so, log);
    } catch (const ConfigError& e) {
        bootstrap.error("config_error", {{"error", e.what()}});
        return 1;
    } catch (const std::exception& e) {
        bootstrap.error("fatal", {{"error", e.what()}});
        return 2;
    }
    return 1;
}
