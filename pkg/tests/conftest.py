"""Shared test helpers: pinned lexicons and independent tree walkers.

The walkers here deliberately reimplement traversal (iteratively, with an
explicit stack) so tests never validate library code against itself.
"""

from __future__ import annotations

import itertools

from gridlang.ast import ActionStmt, If, Loop, Move, Program
from gridlang.grammar import (
    GrammarSpec,
    LexiconMode,
    NATURAL_POOLS,
    Style,
    TerminalRole as R,
    used_roles,
)

ALL_COMBOS = tuple(itertools.product(Style, LexiconMode))

_PUNCT_DEFAULTS = {R.LBR: "{", R.RBR: "}", R.PAR_L: "(", R.PAR_R: ")",
                   R.SEMI: ";"}


def fixed_terminals(style: Style, **overrides: str) -> dict:
    """First pool option per role, punctuation structural; overridable."""
    terminals = {}
    for role in used_roles(style):
        if role in _PUNCT_DEFAULTS:
            terminals[role] = _PUNCT_DEFAULTS[role]
        else:
            terminals[role] = NATURAL_POOLS[role][0]
    for name, token in overrides.items():
        terminals[R[name]] = token
    return terminals


def fixed_grammar(style: Style = Style.BLOCK, **overrides: str) -> GrammarSpec:
    return GrammarSpec(style, LexiconMode.NATURAL,
                       fixed_terminals(style, **overrides), seed=0)


def iter_statements(program: Program):
    """Every statement in the tree, iteratively (independent oracle)."""
    stack = list(program.body)
    while stack:
        stmt = stack.pop()
        yield stmt
        if isinstance(stmt, Loop):
            stack.extend(stmt.body)
        elif isinstance(stmt, If):
            stack.extend(stmt.then)
            if stmt.orelse is not None:
                stack.extend(stmt.orelse)


def iter_expressions(program: Program):
    """Every arithmetic expression and condition embedded in the tree."""
    for stmt in iter_statements(program):
        if isinstance(stmt, ActionStmt):
            if isinstance(stmt.action, Move):
                yield stmt.action.steps
        elif isinstance(stmt, Loop):
            yield stmt.count
        elif isinstance(stmt, If):
            yield stmt.cond


def oracle_control_depth(program: Program) -> int:
    """Max control nesting, computed by explicit depth-tagged traversal."""
    best = 0
    stack = [(stmt, 1) for stmt in program.body]
    while stack:
        stmt, depth = stack.pop()
        if isinstance(stmt, Loop):
            best = max(best, depth)
            stack.extend((s, depth + 1) for s in stmt.body)
        elif isinstance(stmt, If):
            best = max(best, depth)
            stack.extend((s, depth + 1) for s in stmt.then)
            if stmt.orelse is not None:
                stack.extend((s, depth + 1) for s in stmt.orelse)
    return best
