#include "c2kit/pairs.hpp"

#include <sstream>

#include "c2kit/util.hpp"

namespace c2kit {

std::string planner_prompt(std::string_view c2_text) {
    return "Decompose the query into a three-level tree of subqueries, then select an outline of four connected "
           "subqueries from the tree that follows the query's instruction.\n\nQuery: " +
           trim_copy(c2_text);
}

std::string planner_completion(const QTree& tree, const Outline& outline) {
    return render_tree(tree) + std::string(kOutlineSeparator) + "\n" + render_outline(outline);
}

std::pair<QTree, Outline> parse_planner_completion(std::string_view completion, std::string base_query,
                                                   std::string tree_id) {
    const auto sep = completion.find(kOutlineSeparator);
    if (sep == std::string_view::npos) throw std::invalid_argument("completion has no outline separator");
    QTree tree = parse_tree(completion.substr(0, sep), std::move(base_query), std::move(tree_id));

    std::vector<TreePath> paths;
    for (const auto& line : split_lines(completion.substr(sep + kOutlineSeparator.size()))) {
        const auto t = trim_copy(line);
        if (t.empty()) continue;
        const auto space = t.find(' ');
        auto path = TreePath::parse(t.substr(0, space));
        if (!path || space == std::string::npos) throw std::invalid_argument("bad outline line '" + t + "'");
        if (trim_copy(t.substr(space + 1)) != tree.text(*path)) {
            throw std::invalid_argument("outline text for " + path->str() + " does not match the tree");
        }
        paths.push_back(*path);
    }
    Outline outline = make_outline(tree, std::move(paths));
    return {std::move(tree), std::move(outline)};
}

nlohmann::json to_json(const SftRecord& r) {
    return {{"c2_id", r.c2_id}, {"candidate_index", r.candidate_index}, {"prompt", r.prompt}, {"completion", r.completion}};
}

std::vector<SftRecord> build_sft(const std::vector<CandidateSet>& dataset) {
    std::vector<SftRecord> out;
    for (const auto& set : dataset) {
        if (set.noisy) continue;
        const std::string prompt = planner_prompt(set.query.text());
        for (std::size_t i = 0; i < set.candidates.size(); ++i) {
            out.push_back({set.query.id, i, prompt, planner_completion(*set.tree, set.candidates[i])});
        }
    }
    return out;
}

std::string_view to_string(NegativeKind k) {
    return k == NegativeKind::Scored ? "scored" : "synthetic";
}

nlohmann::json to_json(const DpoRecord& r) {
    const auto strs = [](const std::vector<TreePath>& ps) {
        nlohmann::json a = nlohmann::json::array();
        for (const auto& p : ps) a.push_back(p.str());
        return a;
    };
    nlohmann::json j = {{"c2_id", r.c2_id},
                        {"prompt", r.prompt},
                        {"chosen", r.chosen},
                        {"rejected", r.rejected},
                        {"negative_kind", to_string(r.negative_kind)},
                        {"tree_id", r.tree_id},
                        {"intent", to_string(r.intent)},
                        {"background_path", r.background.str()},
                        {"chosen_paths", strs(r.chosen_paths)},
                        {"rejected_paths", strs(r.rejected_paths)},
                        {"chosen_score", r.chosen_score}};
    j["rejected_score"] = r.rejected_score ? nlohmann::json(*r.rejected_score) : nlohmann::json(nullptr);
    return j;
}

DpoBuild build_dpo(const std::vector<JudgedGroup>& groups) {
    DpoBuild out;
    for (const auto& g : groups) {
        if (g.judged.empty()) continue;
        const auto rank = rank_candidates(g.judged);
        if (rank.tie) {
            ++out.skipped_ties;
            continue;
        }
        const auto& best = g.judged[rank.best];
        const auto& worst = g.judged[rank.worst];
        DpoRecord r;
        r.c2_id = g.query.id;
        r.tree_id = g.query.tree_id;
        r.prompt = planner_prompt(g.query.text());
        r.chosen = planner_completion(*g.tree, best.outline);
        r.rejected = planner_completion(*g.tree, worst.outline);
        r.negative_kind = NegativeKind::Scored;
        r.intent = g.query.intent;
        r.background = g.query.background;
        r.chosen_paths = best.outline.paths;
        r.rejected_paths = worst.outline.paths;
        r.chosen_score = best.score;
        r.rejected_score = worst.score;
        out.records.push_back(std::move(r));
    }
    return out;
}

std::vector<DpoRecord> build_synneg(const std::vector<DpoRecord>& scored, const std::map<std::string, QTree>& trees,
                                    std::uint64_t seed) {
    std::vector<DpoRecord> out;
    out.reserve(scored.size());
    for (const auto& r : scored) {
        auto it = trees.find(r.tree_id);
        if (it == trees.end()) throw std::invalid_argument("no tree '" + r.tree_id + "' for record " + r.c2_id);
        const QTree& tree = it->second;
        const Outline positive = make_outline(tree, r.chosen_paths);
        const Outline negative = synthetic_negative(tree, positive, r.background, r.intent, derive_seed(seed, r.c2_id));

        DpoRecord s = r;
        s.rejected = planner_completion(tree, negative);
        s.rejected_paths = negative.paths;
        s.rejected_score.reset();
        s.negative_kind = NegativeKind::Synthetic;
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<DpoRecord> build_combined(const std::vector<DpoRecord>& scored, const std::vector<DpoRecord>& synneg) {
    std::vector<DpoRecord> out = scored;
    out.insert(out.end(), synneg.begin(), synneg.end());
    return out;
}

std::string render_export_metadata(const ExportCounts& counts, std::uint64_t seed, const std::string& config_hash) {
    std::ostringstream y;
    y << "# c2kit export metadata\n"
      << "seed: " << seed << "\n"
      << "config_hash: \"" << config_hash << "\"\n"
      << "counts:\n"
      << "  queries: " << counts.queries << "\n"
      << "  noisy_filtered: " << counts.noisy << "\n"
      << "  sft: " << counts.sft << "\n"
      << "  dpo_scored: " << counts.dpo << "\n"
      << "  dpo_ties_skipped: " << counts.ties << "\n"
      << "  dpo_synneg: " << counts.synneg << "\n"
      << "  dpo_combined: " << counts.combined << "\n"
      << "hyperparameters:\n"
      << "  sft:\n"
      << "    epochs: 1\n"
      << "    batch_size_per_device: 14\n"
      << "    learning_rate: 2.0e-5\n"
      << "    lr_schedule: cosine\n"
      << "    warmup_ratio: 0.1\n"
      << "    gradient_accumulation_steps: 1\n"
      << "  dpo:\n"
      << "    epochs: 1\n"
      << "    batch_size_per_device: 8\n"
      << "    learning_rate: 5.0e-7\n"
      << "    lr_schedule: cosine\n"
      << "    warmup_ratio: 0.1\n"
      << "    gradient_accumulation_steps: 2\n"
      << "    beta: 0.01\n";
    return y.str();
}

}  // namespace c2kit
