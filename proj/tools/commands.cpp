#include "commands.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include "c2kit/c2.hpp"
#include "c2kit/judge.hpp"
#include "c2kit/outline.hpp"
#include "c2kit/pairs.hpp"
#include "c2kit/qtree.hpp"
#include "c2kit/rag.hpp"
#include "c2kit/stats.hpp"
#include "c2kit/util.hpp"

namespace c2kit::cli {

namespace {

std::string out_path(const PipelineConfig& cfg, const std::string& name) {
    return (std::filesystem::path(cfg.out_dir) / name).string();
}

std::string or_default(const std::string& given, const PipelineConfig& cfg, const std::string& name) {
    return given.empty() ? out_path(cfg, name) : given;
}

int finish(const PipelineConfig& cfg, Logger& log, const std::string& command, std::size_t attempted,
           std::size_t failed, nlohmann::json extra = nlohmann::json::object()) {
    extra["command"] = command;
    extra["attempted"] = attempted;
    extra["failed"] = failed;
    log.info("command_done", extra);
    if (attempted > 0 && failed > 0 &&
        static_cast<double>(failed) / static_cast<double>(attempted) > cfg.failure_threshold) {
        log.error("failure_threshold_exceeded", {{"command", command}, {"threshold", cfg.failure_threshold}});
        return 2;
    }
    return 0;
}

struct TreeSet {
    std::vector<std::string> order;
    std::map<std::string, QTree> by_id;
    std::map<std::string, std::string> source;

    const QTree& at(const std::string& id) const {
        auto it = by_id.find(id);
        if (it == by_id.end()) throw ConfigError("no tree with id " + id);
        return it->second;
    }
};

TreeSet load_trees(const std::string& path) {
    TreeSet set;
    for (const auto& r : read_stage(path, {"trees/1"}).records) {
        try {
            auto tree = tree_from_json(r);
            const std::string id = tree.id();
            if (set.by_id.count(id)) continue;
            set.order.push_back(id);
            set.source[id] = r.value("source", "");
            set.by_id.emplace(id, std::move(tree));
        } catch (const std::exception& e) {
            throw ConfigError(path + ": bad tree record: " + e.what());
        }
    }
    return set;
}

std::vector<C2Query> load_c2(const std::string& path) {
    std::vector<C2Query> out;
    for (const auto& r : read_stage(path, {"c2/1"}).records) {
        try {
            out.push_back(c2_from_json(r));
        } catch (const std::exception& e) {
            throw ConfigError(path + ": bad C2 record: " + e.what());
        }
    }
    return out;
}

std::map<std::string, nlohmann::json> load_by_c2_id(const std::string& path, const std::set<std::string>& schemas) {
    std::map<std::string, nlohmann::json> out;
    for (auto& r : read_stage(path, schemas).records) {
        if (!r.contains("c2_id")) throw ConfigError(path + ": record without c2_id");
        out.emplace(r["c2_id"].get<std::string>(), std::move(r));
    }
    return out;
}

std::vector<Outline> candidate_outlines(const nlohmann::json& record, const QTree& tree) {
    std::vector<Outline> out;
    for (const auto& c : record.at("candidates")) out.push_back(outline_from_json(c, tree));
    return out;
}

}  // namespace

int cmd_build_trees(const PipelineConfig& cfg, const BuildTreesOptions& opt, Logger& log) {
    SeedSource source;
    Split split;
    try {
        source = seed_source_from_string(opt.source);
        split = split_from_string(opt.split);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    std::vector<std::string> rejects;
    auto seeds = read_seed_queries(read_text_file(opt.input), source, split, opt.clean, &rejects);
    for (const auto& r : rejects) log.warn("seed_skipped", {{"reason", r}});

    StageWriter writer(out_path(cfg, "trees.jsonl"), make_header(cfg, "trees/1"), "tree_id", cfg.overwrite);
    std::set<std::string> seen;
    std::vector<const SeedQuery*> todo;
    for (const auto& s : seeds) {
        if (!seen.insert(s.id).second) {
            log.warn("seed_duplicate", {{"id", s.id}});
            continue;
        }
        if (!writer.done(s.id)) todo.push_back(&s);
    }
    auto llm = make_gateway(cfg);

    std::vector<std::optional<nlohmann::json>> results(todo.size());
    std::atomic<std::size_t> failed{0};
    ordered_parallel_for(
        todo.size(), cfg.workers,
        [&](std::size_t i) {
            const auto& s = *todo[i];
            try {
                auto j = tree_to_json(decompose_tree(s.text, s.id, *llm));
                j["source"] = to_string(s.source);
                j["split"] = to_string(s.split);
                results[i] = std::move(j);
            } catch (const std::exception& e) {
                ++failed;
                log.error("tree_failed", {{"id", s.id}, {"error", e.what()}});
            }
        },
        [&](std::size_t i) {
            if (results[i]) writer.write(*results[i]);
            results[i].reset();
        });
    return finish(cfg, log, "build-trees", todo.size(), failed,
                  {{"skipped_seeds", rejects.size()}, {"resumed", writer.resumed()}});
}

int cmd_gen_c2(const PipelineConfig& cfg, const GenC2Options& opt, Logger& log) {
    const auto trees = load_trees(or_default(opt.trees, cfg, "trees.jsonl"));
    const auto intents = assign_intents(trees.order.size(), cfg.intent_ratio, derive_seed(cfg.seed, "intents"));

    StageWriter c2_out(out_path(cfg, "c2.jsonl"), make_header(cfg, "c2/1"), "id", cfg.overwrite);
    StageWriter cand_out(out_path(cfg, "candidates.jsonl"), make_header(cfg, "candidates/1"), "c2_id", cfg.overwrite);
    StageWriter rej_out(out_path(cfg, "c2_rejected.jsonl"), make_header(cfg, "c2_rejected/1"), "c2_id", cfg.overwrite);

    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < trees.order.size(); ++i) {
        const auto& id = trees.order[i];
        if (!c2_out.done(id) && !rej_out.done(id)) todo.push_back(i);
    }
    auto llm = make_gateway(cfg);

    struct Outcome {
        std::optional<FinalizeResult> result;
        CoverageLint lint;
    };
    std::vector<Outcome> results(todo.size());
    std::atomic<std::size_t> failed{0};
    std::size_t accepted = 0, rejected = 0;
    ordered_parallel_for(
        todo.size(), cfg.workers,
        [&](std::size_t k) {
            const auto& id = trees.order[todo[k]];
            const auto& tree = trees.at(id);
            const IntentOp intent = intents[todo[k]];
            try {
                const auto background = select_background(tree, derive_seed(cfg.seed, "background:" + id));
                const auto samples = generate_coverage(tree, background, intent, *llm);
                auto res = finalize_coverage(samples, tree, background, intent, id, trees.source.at(id), *llm);
                if (const auto* f = std::get_if<FinalizedC2>(&res)) {
                    results[k].lint = lint_coverage(f->query.coverage_query, tree.text(background), tree.base_query());
                }
                results[k].result = std::move(res);
            } catch (const std::exception& e) {
                ++failed;
                log.error("c2_failed", {{"id", id}, {"error", e.what()}});
            }
        },
        [&](std::size_t k) {
            const auto& id = trees.order[todo[k]];
            auto& outcome = results[k];
            if (!outcome.result) return;
            if (const auto* f = std::get_if<FinalizedC2>(&*outcome.result)) {
                auto cand = candidates_to_json(*f);
                cand["noisy"] = outcome.lint.noisy();
                cand["lint"] = outcome.lint.warnings;
                cand["parse_warnings"] = f->warnings;
                cand_out.write(cand);
                c2_out.write(to_json(f->query));
                ++accepted;
                if (outcome.lint.noisy()) log.info("c2_noisy", {{"id", id}, {"lint", outcome.lint.warnings}});
            } else {
                const auto& r = std::get<RejectedC2>(*outcome.result);
                rej_out.write({{"c2_id", id}, {"tree_id", id}, {"reasons", r.reasons}});
                ++rejected;
                log.info("c2_rejected", {{"id", id}, {"reasons", r.reasons}});
            }
            outcome.result.reset();
        });
    return finish(cfg, log, "gen-c2", todo.size(), failed,
                  {{"accepted", accepted}, {"rejected", rejected}, {"resumed", c2_out.resumed() + rej_out.resumed()}});
}

int cmd_judge(const PipelineConfig& cfg, const JudgeOptions& opt, Logger& log) {
    const auto trees = load_trees(or_default(opt.trees, cfg, "trees.jsonl"));
    const auto queries = load_c2(or_default(opt.c2, cfg, "c2.jsonl"));
    const bool single = !opt.outlines.empty();

    std::map<std::string, nlohmann::json> inputs;
    std::string out_name = "judged.jsonl", schema = "judged/1";
    if (single) {
        if (opt.system.empty()) throw ConfigError("--outlines needs --system to name the scored system");
        inputs = load_by_c2_id(opt.outlines, {"outlines/1"});
        out_name = "scores_" + opt.system + ".jsonl";
        schema = "scores/1";
    } else {
        inputs = load_by_c2_id(or_default(opt.candidates, cfg, "candidates.jsonl"), {"candidates/1"});
    }

    StageWriter writer(out_path(cfg, out_name), make_header(cfg, schema), "c2_id", cfg.overwrite);
    std::vector<const C2Query*> todo;
    for (const auto& q : queries) {
        if (writer.done(q.id)) continue;
        if (!inputs.count(q.id)) {
            log.warn("judge_missing_input", {{"id", q.id}});
            continue;
        }
        todo.push_back(&q);
    }
    auto llm = make_gateway(cfg);

    std::vector<std::vector<nlohmann::json>> results(todo.size());
    std::atomic<std::size_t> failed{0};
    ordered_parallel_for(
        todo.size(), cfg.workers,
        [&](std::size_t i) {
            const auto& q = *todo[i];
            try {
                const auto& tree = trees.at(q.tree_id);
                const auto& input = inputs.at(q.id);
                std::vector<nlohmann::json> rows;
                if (single) {
                    const auto judged = score_outline(q, outline_from_json(input, tree), 0, *llm);
                    auto row = to_json(judged);
                    row.erase("candidate_index");
                    row["system"] = opt.system;
                    rows.push_back(std::move(row));
                } else {
                    const auto outlines = candidate_outlines(input, tree);
                    for (std::size_t c = 0; c < outlines.size(); ++c) {
                        rows.push_back(to_json(score_outline(q, outlines[c], c, *llm)));
                    }
                }
                results[i] = std::move(rows);
            } catch (const std::exception& e) {
                ++failed;
                log.error("judge_failed", {{"id", q.id}, {"error", e.what()}});
            }
        },
        [&](std::size_t i) {
            for (const auto& row : results[i]) writer.write(row);
            results[i].clear();
        });
    return finish(cfg, log, "judge", todo.size(), failed, {{"resumed", writer.resumed()}});
}

int cmd_export(const PipelineConfig& cfg, const ExportOptions& opt, Logger& log) {
    const auto trees = load_trees(or_default(opt.trees, cfg, "trees.jsonl"));
    const auto queries = load_c2(or_default(opt.c2, cfg, "c2.jsonl"));
    const auto candidates = load_by_c2_id(or_default(opt.candidates, cfg, "candidates.jsonl"), {"candidates/1"});

    std::map<std::string, std::vector<nlohmann::json>> judged_rows;
    for (auto& r : read_stage(or_default(opt.judged, cfg, "judged.jsonl"), {"judged/1"}).records) {
        judged_rows[r.at("c2_id").get<std::string>()].push_back(std::move(r));
    }

    ExportCounts counts;
    std::vector<CandidateSet> sets;
    std::vector<JudgedGroup> groups;
    for (const auto& q : queries) {
        auto cand = candidates.find(q.id);
        if (cand == candidates.end()) {
            log.warn("export_missing_candidates", {{"id", q.id}});
            continue;
        }
        const QTree& tree = trees.at(q.tree_id);
        const bool noisy = cand->second.value("noisy", false);
        ++counts.queries;
        if (noisy) ++counts.noisy;
        sets.push_back({q, &tree, candidate_outlines(cand->second, tree), noisy});
        if (noisy) continue;

        auto rows = judged_rows.find(q.id);
        if (rows == judged_rows.end() || rows->second.size() != sets.back().candidates.size()) {
            log.warn("export_incomplete_judgements", {{"id", q.id}});
            continue;
        }
        JudgedGroup g{q, &tree, {}};
        for (const auto& r : rows->second) g.judged.push_back(judged_from_json(r, tree));
        std::sort(g.judged.begin(), g.judged.end(),
                  [](const auto& a, const auto& b) { return a.candidate_index < b.candidate_index; });
        groups.push_back(std::move(g));
    }

    const auto sft = build_sft(sets);
    const auto dpo = build_dpo(groups);
    const auto synneg = build_synneg(dpo.records, trees.by_id, derive_seed(cfg.seed, "synneg"));
    const auto combined = build_combined(dpo.records, synneg);
    counts.sft = sft.size();
    counts.dpo = dpo.records.size();
    counts.ties = dpo.skipped_ties;
    counts.synneg = synneg.size();
    counts.combined = combined.size();

    const auto dump = [](const auto& records) {
        std::vector<nlohmann::json> out;
        for (const auto& r : records) out.push_back(to_json(r));
        return out;
    };
    write_stage(out_path(cfg, "sft.jsonl"), make_header(cfg, "sft/1"), dump(sft));
    write_stage(out_path(cfg, "dpo_scored.jsonl"), make_header(cfg, "dpo/1"), dump(dpo.records));
    write_stage(out_path(cfg, "dpo_synneg.jsonl"), make_header(cfg, "dpo/1"), dump(synneg));
    write_stage(out_path(cfg, "dpo_combined.jsonl"), make_header(cfg, "dpo/1"), dump(combined));
    std::ofstream meta(out_path(cfg, "metadata.yaml"), std::ios::trunc | std::ios::binary);
    meta << render_export_metadata(counts, cfg.seed, cfg.hash());

    return finish(cfg, log, "export", 0, 0,
                  {{"queries", counts.queries},
                   {"noisy", counts.noisy},
                   {"sft", counts.sft},
                   {"dpo", counts.dpo},
                   {"ties", counts.ties},
                   {"synneg", counts.synneg},
                   {"combined", counts.combined}});
}

int cmd_baseline(const PipelineConfig& cfg, const BaselineOptions& opt, Logger& log) {
    const auto trees = load_trees(or_default(opt.trees, cfg, "trees.jsonl"));
    const bool per_query = !opt.c2.empty();
    StageWriter writer(out_path(cfg, "baseline.jsonl"), make_header(cfg, "outlines/1"), per_query ? "c2_id" : "tree_id",
                       cfg.overwrite);
    std::size_t written = 0;
    const auto emit = [&](const std::string& id, const std::string& tree_id) {
        if (writer.done(id)) return;
        auto rec = outline_to_json(random_outline(trees.at(tree_id), derive_seed(cfg.seed, "baseline:" + id)));
        if (per_query) rec["c2_id"] = id;
        rec["system"] = "Random";
        writer.write(rec);
        ++written;
    };
    if (per_query) {
        for (const auto& q : load_c2(opt.c2)) emit(q.id, q.tree_id);
    } else {
        for (const auto& id : trees.order) emit(id, id);
    }
    return finish(cfg, log, "baseline", written, 0, {{"resumed", writer.resumed()}});
}

int cmd_rag(const PipelineConfig& cfg, const RagOptions& opt, Logger& log) {
    RagMode mode;
    try {
        mode = rag_mode_from_string(opt.mode);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    const auto queries = load_c2(or_default(opt.c2, cfg, "c2.jsonl"));

    std::map<std::string, Outline> outlines;
    if (mode == RagMode::Outline) {
        if (opt.outlines.empty()) throw ConfigError("outline mode needs --outlines (judged or outline records)");
        const auto trees = load_trees(or_default(opt.trees, cfg, "trees.jsonl"));
        std::map<std::string, std::string> tree_of;
        for (const auto& q : queries) tree_of[q.id] = q.tree_id;
        const auto file = read_stage(opt.outlines, {"judged/1", "outlines/1"});
        std::map<std::string, std::vector<JudgedOutline>> groups;
        for (const auto& r : file.records) {
            const auto id = r.at("c2_id").get<std::string>();
            if (!tree_of.count(id)) continue;
            const auto& tree = trees.at(tree_of[id]);
            if (file.header.schema == "judged/1") {
                groups[id].push_back(judged_from_json(r, tree));
            } else {
                outlines.emplace(id, outline_from_json(r, tree));
            }
        }
        for (auto& [id, g] : groups) {
            std::sort(g.begin(), g.end(), [](const auto& a, const auto& b) { return a.candidate_index < b.candidate_index; });
            outlines.emplace(id, g[rank_candidates(g).best].outline);
        }
    }

    std::unique_ptr<SearchClient> search;
    if (!cfg.search_fixtures.empty()) {
        search = FixtureSearchClient::from_path(cfg.search_fixtures);
    } else if (cfg.mock || !cfg.replay_journal.empty()) {
        search = std::make_unique<MockSearchClient>();
    } else {
        try {
            search = HttpSearchClient::from_env();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
        }
    }
    const LexicalScorer scorer;

    StageWriter writer(out_path(cfg, "rag_" + std::string(to_string(mode)) + ".jsonl"), make_header(cfg, "rag/1"),
                       "c2_id", cfg.overwrite);
    std::vector<const C2Query*> todo;
    for (const auto& q : queries) {
        if (writer.done(q.id)) continue;
        if (mode == RagMode::Outline && !outlines.count(q.id)) {
            log.warn("rag_missing_outline", {{"id", q.id}});
            continue;
        }
        todo.push_back(&q);
    }
    auto llm = make_gateway(cfg);

    std::vector<std::optional<nlohmann::json>> results(todo.size());
    std::atomic<std::size_t> failed{0};
    ordered_parallel_for(
        todo.size(), cfg.workers,
        [&](std::size_t i) {
            const auto& q = *todo[i];
            try {
                const Outline* outline = mode == RagMode::Outline ? &outlines.at(q.id) : nullptr;
                const auto run = run_rag(q, mode, outline, *search, scorer, *llm);
                for (const auto& e : run.execution.errors) log.warn("search_error", {{"id", q.id}, {"error", e}});
                for (const auto& s : run.execution.shortfalls) {
                    log.info("search_shortfall", {{"id", q.id}, {"query", s.query}, {"received", s.received}});
                }
                for (const auto& w : run.evidence.warnings) log.warn("evidence_warning", {{"id", q.id}, {"warning", w}});
                if (run.evidence.passages.empty()) {
                    ++failed;
                    log.error("rag_no_evidence", {{"id", q.id}});
                }
                results[i] = to_json(run);
            } catch (const std::exception& e) {
                ++failed;
                log.error("rag_failed", {{"id", q.id}, {"error", e.what()}});
            }
        },
        [&](std::size_t i) {
            if (results[i]) writer.write(*results[i]);
            results[i].reset();
        });
    return finish(cfg, log, "rag", todo.size(), failed, {{"mode", to_string(mode)}, {"resumed", writer.resumed()}});
}

int cmd_stats(const PipelineConfig& cfg, const StatsOptions& opt, Logger& log) {
    ReportInputs in;
    try {
        for (const auto& path : opt.scores) {
            for (auto& t : read_score_jsonl(read_text_file(path))) {
                for (const auto& existing : in.systems) {
                    if (existing.system == t.system) throw ConfigError("system " + t.system + " appears in two score files");
                }
                in.systems.push_back(std::move(t));
            }
        }
        if (!opt.intents.empty()) {
            for (const auto& line : split_lines(read_text_file(opt.intents))) {
                if (trim_copy(line).empty()) continue;
                const auto j = nlohmann::json::parse(line, nullptr, false);
                if (j.is_discarded() || !j.is_object()) throw ConfigError(opt.intents + ": not JSON lines");
                if (j.contains("_header")) continue;
                const auto id = j.contains("id") ? j["id"].get<std::string>() : j.at("c2_id").get<std::string>();
                in.intents[id] = intent_from_string(j.at("intent").get<std::string>());
            }
        }
        if (!opt.contingency.empty()) in.contingencies = read_contingency_csv(read_text_file(opt.contingency));
        for (const auto& spec : opt.compare) {
            const auto colon = spec.find(':');
            if (colon == std::string::npos) throw ConfigError("--compare expects A:B, got '" + spec + "'");
            in.comparisons.emplace_back(spec.substr(0, colon), spec.substr(colon + 1));
        }
        if (opt.compare.empty() && in.systems.size() >= 2) {
            const auto& last = in.systems.back().system;
            for (std::size_t i = 0; i + 1 < in.systems.size(); ++i) in.comparisons.emplace_back(last, in.systems[i].system);
        }
        const auto report = render_report(in);
        const auto path = or_default(opt.report, cfg, "report.md");
        if (const auto dir = std::filesystem::path(path).parent_path(); !dir.empty()) {
            std::filesystem::create_directories(dir);
        }
        std::ofstream(path, std::ios::trunc | std::ios::binary) << report;
        std::cout << report;
        log.info("report_written", {{"path", path}});
    } catch (const StatsError& e) {
        throw ConfigError(e.what());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad stats input: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return finish(cfg, log, "stats", 0, 0);
}

}  // namespace c2kit::cli
