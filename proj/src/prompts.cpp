#include "c2kit/llm_gateway.hpp"

namespace c2kit {

// Template wordings are reconstructions; only their slot sets and output
// contracts are relied upon by the parsers.

TemplateRegistry default_templates() {
    TemplateRegistry reg;

    reg.add({"tree_decompose",
             "Decompose the question below into a tree of subqueries that unfolds the range of information a "
             "complete long-form answer could cover.\n"
             "The tree has exactly three levels. There are 3 top-level subqueries, each with 3 more specific "
             "subqueries, each of which has 3 even more specific subqueries (39 in total). Deeper subqueries must "
             "be more specific than their parent. No two subqueries may overlap.\n"
             "Answer with the numbered list only, indenting each level by four spaces:\n"
             "1. ...\n    1.1. ...\n        1.1.1. ...\n\n"
             "{{base_query}}\n",
             {"base_query"}});

    reg.add({"coverage_generate",
             "A user asked the question below. The subquery tree lists what an answer could cover.\n"
             "{{base_query}}\n{{tree}}\n"
             "The user already knows about the following background subquery:\n{{background}}\n"
             "Write a follow-up instruction (coverage query) of one or two sentences that the user would append to "
             "the question. The operation is given below: for inclusion the instruction asks to include details on "
             "the background subtopic; for exclusion it asks to avoid the background subtopic, optionally "
             "redirecting focus elsewhere. Mention the subtopic explicitly.\n{{intent}}\n"
             "Produce five different instructions as JSON: {\"coverage_queries\": [\"...\", \"...\", \"...\", "
             "\"...\", \"...\"]}\n",
             {"base_query", "tree", "background", "intent"}});

    reg.add({"candidate_extract",
             "Select outlines from the subquery tree that satisfy the instruction in the query.\n"
             "{{c2_query}}\n{{tree}}\n"
             "An outline has exactly four subqueries that are directly connected (parent and child) or "
             "neighbouring (children of the same parent) within the tree. Generate three different candidate "
             "outlines one after another, each as different from the previous ones as the instruction allows.\n"
             "Answer in JSON: {\"candidates\": [{\"queries\": [{\"path\": \"1.1\", \"text\": \"...\"}, ...]}, "
             "...]}\n",
             {"c2_query", "tree"}});

    reg.add({"judge_score",
             "Evaluate how faithfully the outline of subqueries aligns with the instruction in the query, using "
             "the score rubric.\n"
             "{{c2_query}}\n{{outline}}\n{{rubric}}\n"
             "Write a short rationale, then the score on its own line, exactly in this format:\n"
             "Rationale: <text>\nScore: <1-5>\n",
             {"c2_query", "outline", "rubric"}});

    reg.add({"rag_respond",
             "Answer the query using only the numbered evidence passages. Do not add facts that are not supported "
             "by the evidence; if the evidence is insufficient, say so and share what is useful. Cite passages as "
             "[n]. Format the answer in Markdown.\n"
             "{{c2_query}}\n{{outline}}\n{{evidence}}\n",
             {"c2_query", "outline", "evidence"}});

    return reg;
}

}  // namespace c2kit
