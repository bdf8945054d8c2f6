"""Walk a hand-written program through the interpreter step by step."""

from gridlang import (
    GenParams,
    LexiconMode,
    Style,
    Final,
    START_STATE,
    exec_program,
    generate_instance,
    parse,
    render_state,
)
from gridlang.grammar import TerminalRole as R, build_grammar

g = build_grammar(Style.BLOCK, LexiconMode.NATURAL, seed=0)
t = g.token
# keyword synonyms are drawn per seed, so spell the program with the
# grammar's own tokens
code = f"""\
{t(R.LOOP)} {t(R.PAR_L)}2 {t(R.OP_ADD)} 1{t(R.PAR_R)} {t(R.TIMES)} {t(R.LBR)}
  {t(R.DO)} {t(R.MOVE)} {t(R.DIR_FWD)} 2 {t(R.END)}
{t(R.RBR)}
{t(R.IF)} {t(R.NOT)} {t(R.PAR_L)}{t(R.HOLDING)} key{t(R.PAR_R)} {t(R.THEN)} {t(R.LBR)}
  {t(R.DO)} {t(R.GRAB)} key {t(R.END)}
  {t(R.DO)} {t(R.TURN)} {t(R.DIR_LEFT)} {t(R.END)}
{t(R.RBR)}"""

prog = parse(code, g)
result = exec_program(prog, START_STATE)
assert isinstance(result, Final)
print(code)
print()
print("start: ", render_state(START_STATE))
print("final: ", render_state(result.state))
print("steps used:", result.steps_used)

# sampled gold programs always fit the budget by construction
params = GenParams(max_depth=8, seed=11)
_, sampled_code, tree = generate_instance(Style.C, LexiconMode.NATURAL,
                                          params)
result = exec_program(tree, START_STATE)
print()
print("sampled program final:", render_state(result.state))
