"""Prompt template constants.

All model-facing wording lives here, fixed verbatim, so runs stay
comparable across models and any rewording is a reviewable diff.
"""

JUDGMENT_OPENER = (
    "You are a strict syntax checker\n"
    "Your task is to determine if the provided code is strictly valid "
    "according to the EBNF grammar."
)

GENERATION_OPENER = (
    "You are a strict code generator.\n"
    "You are given a NEW programming language definition (EBNF)."
)

JUDGMENT_TASK_LINE = (
    "If the code can be parsed by the grammar, output 'VALID', otherwise "
    "output 'INVALID'."
)

GOAL_TASK_LINE = (
    "Your task is to synthesize a valid code according to the EBNF that "
    "guides the robot to the target state."
)

INSTRUCTION_TASK_LINE = (
    "Your task is to faithfully translate the instructions into code. "
    "You must strictly adhere to the provided EBNF syntax and ensure the "
    "hierarchical structure of the generated program exactly matches the "
    "logical nesting of the instructions."
)

EBNF_HEADER = "EBNF:"
CANDIDATE_HEADER = "Code to Check:"
INSTRUCTION_HEADER = "Instructions:"
STATE_LINE = "Start state: {start}. Target final state: {target}."

COT_JUDGMENT_DIRECTIVE = (
    "Reason step by step about the grammar and the candidate code first, "
    "then end your answer with the single word VALID or INVALID."
)

DIRECT_JUDGMENT_DIRECTIVE = (
    "Answer with the single word VALID or INVALID and nothing else."
)

COT_CODE_DIRECTIVE = (
    "Reason step by step about the grammar and the required structure "
    "first, then output the final program inside a fenced code block "
    "(```...```)."
)

DIRECT_CODE_DIRECTIVE = (
    "Output only the final program inside a fenced code block "
    "(```...```), with no explanation."
)

DEMO_HEADER = "Example {index}:"
DEMO_ANSWER_HEADER = "Answer:"
MAIN_HEADER = "Now solve the following."
