#include "c2kit/judge.hpp"

#include <cctype>

#include "c2kit/util.hpp"

namespace c2kit {

const std::array<std::string, 5>& rubric_levels() {
    static const std::array<std::string, 5> levels = {
        "The sub-questions/responses entirely disregards the instructions, providing content unrelated to the "
        "instruction.",
        "The sub-questions/responses show a superficial attempt to follow instructions but significantly strays from "
        "the intended task, missing key objectives.",
        "The sub-questions/responses generally adheres to the instructions but overlooks certain details or nuances, "
        "achieving only a partial match with the instruction.",
        "The sub-questions/responses is closely aligned with the instructions, exhibiting minor deviations that "
        "slightly affect the completeness of the execution.",
        "The sub-questions/responses exhibits impeccable adherence to the instructions, capturing all nuances and "
        "completing the task as specified.",
    };
    return levels;
}

std::string render_rubric() {
    std::string out;
    for (std::size_t i = 0; i < rubric_levels().size(); ++i) {
        if (i) out += "\n\n";
        out += std::to_string(i + 1) + ": " + rubric_levels()[i];
    }
    return out;
}

std::optional<int> parse_score(std::string_view raw) {
    static constexpr std::string_view label = "Score:";
    const auto at = raw.rfind(label);
    if (at == std::string_view::npos) return std::nullopt;

    std::size_t i = at + label.size();
    while (i < raw.size() && (std::isspace(static_cast<unsigned char>(raw[i])) || raw[i] == '*' || raw[i] == '_' ||
                              raw[i] == '`' || raw[i] == '[' || raw[i] == '(')) {
        ++i;
    }
    std::size_t j = i;
    while (j < raw.size() && std::isdigit(static_cast<unsigned char>(raw[j]))) ++j;
    if (j == i || j - i > 3) return std::nullopt;
    // "4.5" is not an integer score
    if (j + 1 < raw.size() && raw[j] == '.' && std::isdigit(static_cast<unsigned char>(raw[j + 1]))) return std::nullopt;

    const int value = std::stoi(std::string(raw.substr(i, j - i)));
    if (value < 1 || value > 5) return std::nullopt;
    return value;
}

std::string parse_rationale(std::string_view raw) {
    const auto score_at = raw.rfind("Score:");
    std::string_view body = raw.substr(0, score_at == std::string_view::npos ? raw.size() : score_at);
    if (const auto r = body.find("Rationale:"); r != std::string_view::npos) body = body.substr(r + 10);
    std::string text = trim_copy(body);
    while (!text.empty() && (text.back() == '*' || text.back() == '#')) text = trim_copy(text.substr(0, text.size() - 1));
    return text.empty() ? trim_copy(raw) : text;
}

nlohmann::json to_json(const JudgedOutline& j) {
    nlohmann::json paths = nlohmann::json::array();
    for (const auto& p : j.outline.paths) paths.push_back(p.str());
    return {{"c2_id", j.c2_id},         {"candidate_index", j.candidate_index},
            {"paths", paths},           {"score", j.score},
            {"rationale", j.rationale}, {"judge_model", j.judge_model},
            {"request_hash", j.request_hash}};
}

JudgedOutline judged_from_json(const nlohmann::json& j, const QTree& tree) {
    JudgedOutline out;
    out.c2_id = j.at("c2_id").get<std::string>();
    out.candidate_index = j.at("candidate_index").get<std::size_t>();
    out.outline = outline_from_json(j, tree);
    out.score = j.at("score").get<int>();
    if (out.score < 1 || out.score > 5) throw std::invalid_argument("judged score out of range for " + out.c2_id);
    out.rationale = j.value("rationale", "");
    out.judge_model = j.value("judge_model", "");
    out.request_hash = j.value("request_hash", "");
    return out;
}

JudgedOutline score_outline(const C2Query& c2, const Outline& outline, std::size_t candidate_index, LlmGateway& llm) {
    CompletionRequest req;
    req.template_name = "judge_score";
    req.slots = {{"c2_query", c2.text()}, {"outline", render_outline(outline)}, {"rubric", render_rubric()}};

    CompletionResult result;
    try {
        result = llm.complete(req, [](const std::string& text) -> std::optional<std::string> {
            if (!parse_score(text)) return "no score in 1..5 found";
            return std::nullopt;
        });
    } catch (const GatewayError& e) {
        if (e.kind() == GatewayError::Kind::OutputRejected) throw ScoreUnparseable(e.what());
        throw;
    }

    JudgedOutline judged;
    judged.c2_id = c2.id;
    judged.candidate_index = candidate_index;
    judged.outline = outline;
    judged.score = *parse_score(result.text);
    judged.rationale = parse_rationale(result.text);
    judged.judge_model = result.provider;
    judged.request_hash = result.request_hash;
    return judged;
}

Ranking rank_candidates(std::span<const JudgedOutline> judged) {
    if (judged.empty()) throw std::invalid_argument("rank_candidates needs at least one judged outline");
    Ranking r;
    for (std::size_t i = 1; i < judged.size(); ++i) {
        if (judged[i].score > judged[r.best].score) r.best = i;
        if (judged[i].score < judged[r.worst].score) r.worst = i;
    }
    r.tie = judged[r.best].score == judged[r.worst].score;
    return r;
}

}  // namespace c2kit
