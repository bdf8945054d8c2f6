"""Build one dataset per task kind and show what each instance carries."""

from gridlang import (
    GenParams,
    LexiconMode,
    Style,
    TaskKind,
    make_dataset,
)

params = GenParams(max_depth=4, seed=99)

judgment = make_dataset(TaskKind.JUDGMENT, 4, Style.BLOCK,
                        LexiconMode.NATURAL, params)
for inst in judgment:
    tag = inst.perturb_category.value if inst.perturb_category else "-"
    print(f"{inst.id}  {inst.gold_label:7}  {tag}")
    print(f"  {inst.candidate.splitlines()[0]} ...")
print()

goal = make_dataset(TaskKind.GOAL, 2, Style.C, LexiconMode.NATURAL, params)
for inst in goal:
    print(inst.id, "target:", inst.target_state)
print()

instruction = make_dataset(TaskKind.INSTRUCTION, 1, Style.SEXPR,
                           LexiconMode.ALIEN, params)
inst = instruction[0]
print(inst.id)
print("instruction:", inst.instruction[:120], "...")
print("gold code first line:", inst.gold_code.splitlines()[0])
