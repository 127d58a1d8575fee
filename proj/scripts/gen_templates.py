#!/usr/bin/env python3
"""Writes the prompt template files and the embedded C++ header from one source."""
import os

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

TEMPLATES = {}

TEMPLATES["zero_shot"] = "\n".join([
    "You are a researcher. You can give novel hypothesis based on your exist knowledge and the given background.",
    "Based on the known existing knowledge, generate new conjectures in the following format:",
    "",
    "(1) xxx",
    "(2) xxx",
    "(3) xxx",
    "",
    "Be sure to use English answers (proper nouns need to be marked in English), statements as concise and academic as possible, do not have too much repetitive information, numerical values using the original numbers, be sure to strictly follow the format, the corresponding content output to xxx.",
    "",
    "Note: Please respond directly to the multiple hypotheses without adding any extra sentences.",
    "",
    "Now give hypothesis based on the following background:",
    "{user_input}",
])

TEMPLATES["few_shot"] = "\n".join([
    "You are a renowned biomedical researcher. You can give novel hypothesis for the background based on your exist knowledge. Please follow the given examples and give the hypothesis in the SINGLE TURN.",
    "",
    "{examples}",
    "Background: {input}",
    "Hypothesis:",
])

TEMPLATES["role_analyst"] = "\n".join([
    "You are the Analyst. Depending on the phase of the iteration, your role may slightly differ:",
    "",
    "- **Initial Phase**: Analyze the provided research background to distill its core components into pivotal keywords or topics. This will set the stage for the Engineer's search efforts.",
    "- **Feedback Phase**: Based on feedback from the Critic, you might need to re-analyze the research background or provide additional insights to refine the search direction.",
    "",
    "In either case, ensure clarity and relevance in your analysis. Conclude by listing the identified keywords or topics or by providing revised insights.",
])

TEMPLATES["role_engineer"] = "\n".join([
    "You are the Engineer. Your task revolves around searching based on the received keywords or insights, and this can involve multiple iterations:",
    "",
    "- Plan your search strategies by crafting logical keyword combinations.",
    "- Conduct systematic searches for each combination, meticulously gathering data and results.",
    "- Refine your searches iteratively based on initial findings and any new insights from the Analyst.",
    "",
    "Your output should be comprehensive and organized. For each keyword combination:",
    "",
    "- **Title of Source**: Provide the title of the paper, article, or material you've found.",
    "- **Abstract/Summary**: A brief summary or the abstract of the source.",
    "- **Key Findings**: Highlight pivotal points or findings from the source that are relevant to the research background.",
    "- **Implications**: If any, mention the implications or significance of the findings.",
    "- **Relevant Quotes/Excerpts**: Extract direct quotes or sections that are particularly insightful.",
    "",
    "Group your findings into individual \"clues\" based on themes or topics that emerge. This structure will provide the Scientist with detailed and organized data, enabling them to craft a robust hypothesis.",
    "",
    "Conclude by presenting the structured \"clues\" for each keyword combination.",
])

TEMPLATES["role_scientist"] = "\n".join([
    "You are the Scientist. Your task is to craft a hypothesis based on the Engineer's findings and the initial research background:",
    "",
    "- Derive a potential hypothesis that bridges the existing literature with new insights.",
    "- Ensure the hypothesis is both innovative and scientifically grounded.",
    "",
    "Clearly state the proposed hypothesis, preparing it for evaluation by the Critic.",
])

TEMPLATES["role_critic"] = "\n".join([
    "You are the Critic, responsible for evaluating the collaborative endeavor. Scrutinize the Scientist's hypothesis in light of the `Research Background`. Gauge its novelty, coherence, and scientific validity. Should the hypothesis necessitate refinement:",
    "",
    "- Clearly articulate feedback, specifying areas needing improvement.",
    "- Instruct the Analyst to either re-evaluate the `Research Background` or offer new insights to reshape the Engineer's subsequent search iteration.",
    "",
    "When the hypothesis aligns with expectations and meets the desired standards, present and approve it using the structured format:",
    "",
    "Final Answer:",
    "(1) [First Point or Aspect of the Hypothesis]",
    "(2) [Second Point or Aspect of the Hypothesis]",
    "(3) [Third Point or Aspect of the Hypothesis]",
    "...",
])

TEMPLATES["agent_env"] = "\n".join([
    "You are part of a collaborative multi-agent system designed to propose a hypothesis based on a given research background. Each of you has a specific role:",
    "",
    "- **Analyst**: Analyzes the research background, distills its essence, and provides pivotal keywords or topics for further exploration.",
    "- **Engineer**: Uses the keywords to plan and conduct systematic searches, meticulously gathering and organizing findings into detailed and structured \"clues\".",
    "- **Scientist**: Crafts a potential hypothesis based on the organized findings and the original research background.",
    "- **Critic**: Evaluates the hypothesis for its novelty, coherence, and scientific validity, providing feedback for refinement if necessary.",
    "",
    "Your collaboration is iterative. Based on feedback from the Critic, the process can loop back to the Analyst for refined insights, leading to new searches by the Engineer, and a refined hypothesis by the Scientist.",
    "",
    "Stay focused on your individual roles, collaborate effectively, and aim to derive a well-informed, novel hypothesis based on the research background provided.",
    "",
    "Research Background:",
    "{background}",
    "",
    "Objective:",
    "Using the research background and collaborative insights, the goal is to construct the most logical and scientifically robust hypothesis. Let's collaborate effectively to achieve this.",
])


def eval_template(metric: str, zero_clause: str, upper_clause: str) -> str:
    return "\n".join([
        "You are an expert in biomedicine.",
        f"Evaluate the {metric} of the generated scientific hypothesis and the given background.",
        f"The score range should be 0 to 3. {zero_clause} {upper_clause} Output is an integer.",
        "",
        "Please provide a step-by-step explanation supporting your score.",
        "At the end of your response, clearly state the score in the format 'Score: [value]', where [value] can be 1, 2, or 3.",
        "",
        "Background: {background}",
        "Generated scientific hypothesis: {hypothesis}",
    ])


TEMPLATES["eval_novelty"] = eval_template(
    "novelty",
    "0 means there's no novelty, which indicates that the hypothesis is a paraphrase of the background.",
    "1 means there's slight novelty. 2 means there's moderate novelty. 3 means the hypothesis has strong novelty, which gives new insights beyond the background.",
)
TEMPLATES["eval_relevance"] = eval_template(
    "relevance",
    "0 means there's no relevance.",
    "1 means there's slight relevance. 2 means there's moderate relevance. 3 means they are strongly related.",
)
TEMPLATES["eval_significance"] = eval_template(
    "significance",
    "0 means there's no significance, which indicates that the hypothesis is just a common knowledge.",
    "1 means there's slight significance. 2 means there's moderate significance. 3 means the hypothesis has strong significance, which gives significant insights beyond the background.",
)
TEMPLATES["eval_verifiability"] = eval_template(
    "verifiability",
    "0 means there's no verifiability, which indicates that the hypothesis is not possible to be verified in future work.",
    "1 means there's slight verifiability. 2 means there's moderate verifiability. 3 means the hypothesis has strong verifiability, which means the hypothesis is very likely to be verified in future work.",
)

ORDER = [
    "zero_shot", "few_shot",
    "role_analyst", "role_engineer", "role_scientist", "role_critic",
    "agent_env",
    "eval_novelty", "eval_relevance", "eval_significance", "eval_verifiability",
]

CONST_NAMES = {
    "zero_shot": "kZeroShot",
    "few_shot": "kFewShot",
    "role_analyst": "kRoleAnalyst",
    "role_engineer": "kRoleEngineer",
    "role_scientist": "kRoleScientist",
    "role_critic": "kRoleCritic",
    "agent_env": "kAgentEnv",
    "eval_novelty": "kEvalNovelty",
    "eval_relevance": "kEvalRelevance",
    "eval_significance": "kEvalSignificance",
    "eval_verifiability": "kEvalVerifiability",
}


def main() -> None:
    tdir = os.path.join(ROOT, "templates")
    os.makedirs(tdir, exist_ok=True)
    for name in ORDER:
        path = os.path.join(tdir, name + ".txt")
        with open(path, "wb") as f:
            f.write(TEMPLATES[name].encode("utf-8"))

    lines = [
        "// Prompt template texts embedded as the single source of truth.",
        "// The files under templates/ hold the same bytes; the test suite",
        "// asserts the two stay identical.",
        "#pragma once",
        "",
        "#include <string_view>",
        "",
        "namespace hypogen::templates {",
        "",
    ]
    for name in ORDER:
        body = TEMPLATES[name]
        lines.append(f"inline constexpr std::string_view {CONST_NAMES[name]} =")
        lines.append(f'    R"__tpl__({body})__tpl__";')
        lines.append("")
    lines.append("}  // namespace hypogen::templates")
    lines.append("")
    header = "\n".join(lines)
    with open(os.path.join(ROOT, "include", "hypogen", "templates.hpp"), "w") as f:
        f.write(header)
    print(f"wrote {len(ORDER)} templates + header")


if __name__ == "__main__":
    main()
