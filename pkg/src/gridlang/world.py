"""Deterministic grid-world semantics.

A robot lives on an unbounded integer grid with a facing and an inventory
multiset.  Programs execute under a step budget where every primitive action
costs exactly one step (a Move of n cells is still one step), loop counts are
evaluated once on entry, and conditionals read the current inventory.
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass

from gridlang.ast import (
    ActionStmt,
    Action,
    ArithExpr,
    ArithOp,
    BinaryArith,
    BinaryBool,
    Block,
    BoolExpr,
    BoolOp,
    Grab,
    Holding,
    If,
    ItemToken,
    Literal,
    Loop,
    Move,
    MoveDir,
    Not,
    Program,
    Stmt,
    Turn,
    TurnDir,
)

__all__ = [
    "Facing",
    "RobotState",
    "START_STATE",
    "DEFAULT_BUDGET",
    "Final",
    "BudgetExceeded",
    "ExecResult",
    "eval_arith",
    "eval_bool",
    "step",
    "exec_program",
    "states_equal",
    "step_bound",
]


class Facing(enum.Enum):
    N = "N"
    E = "E"
    S = "S"
    W = "W"


_LEFT = {Facing.N: Facing.W, Facing.W: Facing.S,
         Facing.S: Facing.E, Facing.E: Facing.N}
_RIGHT = {Facing.N: Facing.E, Facing.E: Facing.S,
          Facing.S: Facing.W, Facing.W: Facing.N}
_DELTA = {Facing.N: (0, 1), Facing.E: (1, 0),
          Facing.S: (0, -1), Facing.W: (-1, 0)}

DEFAULT_BUDGET = 1_000_000


@dataclass(frozen=True)
class RobotState:
    """Position, facing, and an inventory multiset.

    The inventory is stored sorted so that ``==`` is multiset equality
    regardless of grab order.
    """

    x: int
    y: int
    facing: Facing
    inventory: tuple[ItemToken, ...] = ()

    def __post_init__(self) -> None:
        ordered = tuple(sorted(self.inventory, key=lambda i: i.render()))
        object.__setattr__(self, "inventory", ordered)

    def to_dict(self) -> dict:
        return {
            "x": self.x,
            "y": self.y,
            "facing": self.facing.value,
            "inventory": [item.render() for item in self.inventory],
        }

    @staticmethod
    def from_dict(data: dict) -> RobotState:
        extra = set(data) - {"x", "y", "facing", "inventory"}
        if extra:
            raise ValueError(f"unknown state field {sorted(extra)[0]!r}")
        try:
            return RobotState(
                x=int(data["x"]),
                y=int(data["y"]),
                facing=Facing(data["facing"]),
                inventory=tuple(
                    ItemToken.parse(t) for t in data["inventory"]
                ),
            )
        except KeyError as exc:
            raise ValueError(f"state missing field {exc.args[0]!r}") from exc


START_STATE = RobotState(0, 0, Facing.N)


@dataclass(frozen=True)
class Final:
    state: RobotState
    steps_used: int


@dataclass(frozen=True)
class BudgetExceeded:
    pass


ExecResult = Final | BudgetExceeded


def eval_arith(expr: ArithExpr) -> int:
    if isinstance(expr, Literal):
        return expr.value
    if isinstance(expr, BinaryArith):
        left, right = eval_arith(expr.left), eval_arith(expr.right)
        return left + right if expr.op is ArithOp.ADD else left * right
    raise TypeError(f"not an arithmetic expression: {expr!r}")


def eval_bool(cond: BoolExpr, state: RobotState) -> bool:
    if isinstance(cond, Holding):
        return cond.item in state.inventory
    if isinstance(cond, Not):
        return not eval_bool(cond.inner, state)
    if isinstance(cond, BinaryBool):
        left, right = eval_bool(cond.left, state), eval_bool(cond.right, state)
        return (left and right) if cond.op is BoolOp.AND else (left or right)
    raise TypeError(f"not a condition: {cond!r}")


def step(action: Action, state: RobotState) -> RobotState:
    """Apply one primitive action; one budget step regardless of distance."""
    if isinstance(action, Move):
        n = eval_arith(action.steps)
        if action.dir is MoveDir.BACKWARD:
            n = -n
        dx, dy = _DELTA[state.facing]
        return RobotState(state.x + dx * n, state.y + dy * n,
                          state.facing, state.inventory)
    if isinstance(action, Turn):
        table = _LEFT if action.dir is TurnDir.LEFT else _RIGHT
        return RobotState(state.x, state.y, table[state.facing],
                          state.inventory)
    if isinstance(action, Grab):
        return RobotState(state.x, state.y, state.facing,
                          state.inventory + (action.item,))
    raise TypeError(f"not an action: {action!r}")


class _BudgetStop(Exception):
    pass


class _Ctx:
    """Mutable machine registers shared by the compiled closures.

    The inventory is a multiset counter rather than a list: grabbing in a
    large loop would otherwise make every holding-check a linear scan.
    """

    __slots__ = ("x", "y", "facing", "inventory", "steps", "budget")

    def __init__(self, state: RobotState, budget: int) -> None:
        self.x = state.x
        self.y = state.y
        self.facing = state.facing
        self.inventory = Counter(state.inventory)
        self.steps = 0
        self.budget = budget

    def inventory_tuple(self) -> tuple[ItemToken, ...]:
        return tuple(self.inventory.elements())


def _compile_cond(cond: BoolExpr):
    if isinstance(cond, Holding):
        item = cond.item
        return lambda ctx: item in ctx.inventory
    if isinstance(cond, Not):
        inner = _compile_cond(cond.inner)
        return lambda ctx: not inner(ctx)
    if isinstance(cond, BinaryBool):
        left, right = _compile_cond(cond.left), _compile_cond(cond.right)
        if cond.op is BoolOp.AND:
            return lambda ctx: left(ctx) and right(ctx)
        return lambda ctx: left(ctx) or right(ctx)
    raise TypeError(f"not a condition: {cond!r}")


def _compile_stmt(stmt: Stmt):
    if isinstance(stmt, ActionStmt):
        action = stmt.action
        if isinstance(action, Move):
            # arithmetic is state-free, so the distance folds at compile
            # time; one budget step regardless of distance
            n = eval_arith(action.steps)
            if action.dir is MoveDir.BACKWARD:
                n = -n

            def op(ctx):
                ctx.steps += 1
                if ctx.steps > ctx.budget:
                    raise _BudgetStop
                dx, dy = _DELTA[ctx.facing]
                ctx.x += dx * n
                ctx.y += dy * n
            return op
        if isinstance(action, Turn):
            table = _LEFT if action.dir is TurnDir.LEFT else _RIGHT

            def op(ctx):
                ctx.steps += 1
                if ctx.steps > ctx.budget:
                    raise _BudgetStop
                ctx.facing = table[ctx.facing]
            return op
        if isinstance(action, Grab):
            item = action.item

            def op(ctx):
                ctx.steps += 1
                if ctx.steps > ctx.budget:
                    raise _BudgetStop
                ctx.inventory[item] += 1
            return op
        raise TypeError(f"not an action: {action!r}")
    if isinstance(stmt, Loop):
        count = eval_arith(stmt.count)
        body = _compile_block(stmt.body)

        def op(ctx):
            for _ in range(count):
                for f in body:
                    f(ctx)
        return op
    if isinstance(stmt, If):
        cond = _compile_cond(stmt.cond)
        then = _compile_block(stmt.then)
        orelse = _compile_block(stmt.orelse) if stmt.orelse is not None \
            else ()

        def op(ctx):
            branch = then if cond(ctx) else orelse
            for f in branch:
                f(ctx)
        return op
    raise TypeError(f"not a statement: {stmt!r}")


def _compile_block(block: Block) -> tuple:
    return tuple(_compile_stmt(stmt) for stmt in block)


def exec_program(
    program: Program,
    state: RobotState = START_STATE,
    budget: int = DEFAULT_BUDGET,
) -> ExecResult:
    """Run a program to completion or until the step budget is exhausted.

    The program is compiled to closures first: the sampler admits ground
    truth up to half the default budget, and a naive tree walk that builds
    a frozen state per action turns large-count loops into seconds.
    """
    if budget < 1:
        raise ValueError("budget must be at least 1")
    ops = _compile_block(program.body)
    ctx = _Ctx(state, budget)
    try:
        for op in ops:
            op(ctx)
    except _BudgetStop:
        return BudgetExceeded()
    return Final(
        RobotState(ctx.x, ctx.y, ctx.facing, ctx.inventory_tuple()),
        ctx.steps,
    )


def states_equal(a: RobotState, b: RobotState) -> bool:
    """Position, facing, and inventory-as-multiset all equal."""
    return a == b


def step_bound(program: Program, cap: int = DEFAULT_BUDGET) -> int:
    """Static upper bound on steps used, saturating at ``cap + 1``.

    Loop counts are state-free, so the bound is exact for programs without
    conditionals; If contributes the costlier branch.  Used by the generator
    to reject over-budget ground truth without simulating it.
    """
    sat = cap + 1

    def bound_block(block: Block) -> int:
        total = 0
        for stmt in block:
            total += bound_stmt(stmt)
            if total >= sat:
                return sat
        return total

    def bound_stmt(stmt) -> int:
        if isinstance(stmt, ActionStmt):
            return 1
        if isinstance(stmt, Loop):
            inner = bound_block(stmt.body)
            if inner == 0:
                return 0
            return min(sat, eval_arith(stmt.count) * inner)
        if isinstance(stmt, If):
            then = bound_block(stmt.then)
            orelse = bound_block(stmt.orelse) if stmt.orelse else 0
            return max(then, orelse)
        raise TypeError(f"not a statement: {stmt!r}")

    return bound_block(program.body)
