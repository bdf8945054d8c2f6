"""Surface codec: linearize ASTs to styled text and parse text back.

Tokenization is whitespace-insensitive: word characters clump, every other
non-space character stands alone, so ``repeat(3+4)iters`` and
``repeat ( 3 + 4 ) iters`` tokenize identically.  Parsing is recursive
descent specialized per style; errors carry the offending token index.
"""

from __future__ import annotations

import enum
import re
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
    Turn,
    TurnDir,
)
from gridlang.grammar import GrammarSpec, Style, TerminalRole as R

__all__ = [
    "TokenKind",
    "Token",
    "tokenize",
    "ParseError",
    "parse",
    "linearize",
]

_TOKEN_RE = re.compile(r"[A-Za-z0-9_]+|\S")
_ITEM_RE = re.compile(r"(?:item|key|box|ball|cube)(?:_[0-4])?\Z")
_PUNCT_CHARS = frozenset("[]{}();")


class TokenKind(enum.Enum):
    KEYWORD = "keyword"
    INT = "int"
    ITEM = "item"
    PUNCT = "punct"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class Token:
    text: str
    kind: TokenKind
    role: R | None
    start: int
    end: int


def tokenize(text: str, g: GrammarSpec) -> list[Token]:
    """Split into classified tokens; never fails, unknown text is a kind."""
    tokens = []
    for m in _TOKEN_RE.finditer(text):
        word = m.group()
        role = g.keyword_roles.get(word)
        if word in _PUNCT_CHARS:
            kind = TokenKind.PUNCT
        elif role is not None:
            kind = TokenKind.KEYWORD
        elif word.isdigit():
            kind = TokenKind.INT
        elif _ITEM_RE.match(word):
            kind = TokenKind.ITEM
        else:
            kind = TokenKind.UNKNOWN
        tokens.append(Token(word, kind, role, m.start(), m.end()))
    return tokens


class ParseError(ValueError):
    """Rejection with position (token index), expectation, and found text."""

    def __init__(self, position: int, expected: str, found: str) -> None:
        super().__init__(
            f"at token {position}: expected {expected}, found {found}"
        )
        self.position = position
        self.expected = expected
        self.found = found


def parse(code: str, g: GrammarSpec) -> Program:
    """Parse styled code under grammar ``g``; raises ParseError to reject.

    The whole token stream must be consumed: trailing tokens reject.
    """
    parser = _Parser(tokenize(code, g), g)
    body = parser.stmt_seq(at_top=True)
    if parser.i != len(parser.tokens):
        parser.fail("end of input")
    if not body:
        raise ParseError(0, "statement", "end of input")
    return Program(tuple(body))


class _Parser:
    def __init__(self, tokens: list[Token], g: GrammarSpec) -> None:
        self.tokens = tokens
        self.g = g
        self.style = g.style
        self.i = 0

    # --- plumbing ---------------------------------------------------------

    def fail(self, expected: str):
        if self.i < len(self.tokens):
            found = repr(self.tokens[self.i].text)
        else:
            found = "end of input"
        raise ParseError(self.i, expected, found)

    def role(self, offset: int = 0) -> R | None:
        pos = self.i + offset
        if pos < len(self.tokens):
            return self.tokens[pos].role
        return None

    def at(self, role: R, offset: int = 0) -> bool:
        return self.role(offset) is role

    def expect(self, role: R) -> None:
        if not self.at(role):
            self.fail(repr(self.g.token(role)))
        self.i += 1

    def take(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    # --- statements -------------------------------------------------------

    def stmt_seq(self, at_top: bool = False, stop: tuple[R, ...] = ()) -> list:
        """Parse statements until a stop role (or end of input at top)."""
        stmts = []
        while True:
            if at_top:
                if self.i == len(self.tokens):
                    return stmts
            elif self.role() in stop:
                return stmts
            stmts.append(self.stmt())

    def stmt(self):
        if self.style is Style.SEXPR:
            return self._sexpr_stmt()
        role = self.role()
        if self.style is Style.BLOCK:
            if role is R.DO:
                self.i += 1
                action = self.action(end_role=R.END)
                self.expect(R.END)
                return ActionStmt(action)
        elif role in (R.MOVE, R.TURN, R.GRAB):
            action = self.action(end_role=R.SEMI)
            self.expect(R.SEMI)
            return ActionStmt(action)
        if role is R.LOOP:
            return self._loop()
        if role is R.IF:
            return self._if()
        self.fail("statement")

    def _loop(self):
        self.i += 1
        if self.style is Style.BLOCK:
            count = self.arith()
            self.expect(R.TIMES)
        else:  # C style
            self.expect(R.PAR_L)
            count = self.arith()
            self.expect(R.PAR_R)
        return Loop(count, self._braced_block())

    def _if(self):
        self.i += 1
        if self.style is Style.BLOCK:
            cond = self.cond()
            self.expect(R.THEN)
        else:
            self.expect(R.PAR_L)
            cond = self.cond()
            self.expect(R.PAR_R)
        then = self._braced_block()
        orelse = None
        if self.at(R.ELSE):
            self.i += 1
            orelse = self._braced_block()
        return If(cond, then, orelse)

    def _braced_block(self) -> Block:
        """LBR stmt+ RBR for block style; LBR stmt* RBR for C style."""
        self.expect(R.LBR)
        stmts = self.stmt_seq(stop=(R.RBR,))
        if not stmts and self.style is Style.BLOCK:
            self.fail("statement")
        self.expect(R.RBR)
        return tuple(stmts)

    def _sexpr_stmt(self):
        self.expect(R.PAR_L)
        role = self.role()
        if role is R.LOOP:
            self.i += 1
            count = self.arith()
            body = self._sexpr_stmts(stop=(R.PAR_R,))
            self.expect(R.PAR_R)
            return Loop(count, body)
        if role is R.IF:
            self.i += 1
            cond = self.cond()
            self.expect(R.THEN)
            then = self._sexpr_stmts(stop=(R.ELSE, R.PAR_R))
            orelse = None
            if self.at(R.ELSE):
                self.i += 1
                orelse = self._sexpr_stmts(stop=(R.PAR_R,))
            self.expect(R.PAR_R)
            return If(cond, then, orelse)
        if role in (R.MOVE, R.TURN, R.GRAB):
            action = self.action(end_role=R.PAR_R)
            self.expect(R.PAR_R)
            return ActionStmt(action)
        self.fail("statement keyword")

    def _sexpr_stmts(self, stop: tuple[R, ...]) -> Block:
        stmts = self.stmt_seq(stop=stop)
        if not stmts:
            self.fail("statement")
        return tuple(stmts)

    # --- actions ----------------------------------------------------------

    def action(self, end_role: R) -> Action:
        role = self.role()
        if role is R.MOVE:
            self.i += 1
            direction = self._move_dir()
            if self.at(end_role):
                # surface omitted the count: default one step
                return Move(direction, Literal(1), steps_omitted=True)
            return Move(direction, self.arith())
        if role is R.TURN:
            self.i += 1
            return Turn(self._turn_dir())
        if role is R.GRAB:
            self.i += 1
            return Grab(self.item())
        self.fail("action keyword")

    def _move_dir(self) -> MoveDir:
        if self.at(R.DIR_FWD):
            self.i += 1
            return MoveDir.FORWARD
        if self.at(R.DIR_BWD):
            self.i += 1
            return MoveDir.BACKWARD
        self.fail("move direction")

    def _turn_dir(self) -> TurnDir:
        if self.at(R.DIR_LEFT):
            self.i += 1
            return TurnDir.LEFT
        if self.at(R.DIR_RIGHT):
            self.i += 1
            return TurnDir.RIGHT
        self.fail("turn direction")

    def item(self) -> ItemToken:
        if self.i < len(self.tokens):
            tok = self.tokens[self.i]
            if tok.kind is TokenKind.ITEM:
                self.i += 1
                return ItemToken.parse(tok.text)
        self.fail("item token")

    # --- expressions ------------------------------------------------------

    def arith(self) -> ArithExpr:
        if self.style is Style.SEXPR:
            return self._sexpr_arith()
        if self.i < len(self.tokens):
            tok = self.tokens[self.i]
            if tok.kind is TokenKind.INT:
                self.i += 1
                return Literal(int(tok.text))
        if self.at(R.PAR_L):
            self.i += 1
            left = self.arith()
            op = self._arith_op()
            right = self.arith()
            self.expect(R.PAR_R)
            return BinaryArith(op, left, right)
        self.fail("expression")

    def _sexpr_arith(self) -> ArithExpr:
        if self.i < len(self.tokens):
            tok = self.tokens[self.i]
            if tok.kind is TokenKind.INT:
                self.i += 1
                return Literal(int(tok.text))
        self.expect(R.PAR_L)
        op = self._arith_op()
        left = self._sexpr_arith()
        right = self._sexpr_arith()
        self.expect(R.PAR_R)
        return BinaryArith(op, left, right)

    def _arith_op(self) -> ArithOp:
        if self.at(R.OP_ADD):
            self.i += 1
            return ArithOp.ADD
        if self.at(R.OP_MUL):
            self.i += 1
            return ArithOp.MUL
        self.fail("arithmetic operator")

    def cond(self) -> BoolExpr:
        if self.style is Style.SEXPR:
            return self._sexpr_cond()
        role = self.role()
        if role is R.HOLDING:
            self.i += 1
            return Holding(self.item())
        if role is R.NOT:
            self.i += 1
            self.expect(R.PAR_L)
            inner = self.cond()
            self.expect(R.PAR_R)
            return Not(inner)
        if role is R.PAR_L:
            self.i += 1
            left = self.cond()
            op = self._bool_op()
            right = self.cond()
            self.expect(R.PAR_R)
            return BinaryBool(op, left, right)
        self.fail("condition")

    def _sexpr_cond(self) -> BoolExpr:
        self.expect(R.PAR_L)
        role = self.role()
        if role is R.HOLDING:
            self.i += 1
            item = self.item()
            self.expect(R.PAR_R)
            return Holding(item)
        if role is R.NOT:
            self.i += 1
            inner = self._sexpr_cond()
            self.expect(R.PAR_R)
            return Not(inner)
        if role in (R.AND, R.OR):
            op = self._bool_op()
            left = self._sexpr_cond()
            right = self._sexpr_cond()
            self.expect(R.PAR_R)
            return BinaryBool(op, left, right)
        self.fail("condition keyword")

    def _bool_op(self) -> BoolOp:
        if self.at(R.AND):
            self.i += 1
            return BoolOp.AND
        if self.at(R.OR):
            self.i += 1
            return BoolOp.OR
        self.fail("boolean operator")


# --- linearization ---------------------------------------------------------


def linearize(program: Program, g: GrammarSpec) -> str:
    """Render a program under ``g``: one statement per line, two-space
    indent per nesting level.  parse(linearize(t, g), g) recovers t."""
    lines: list[str] = []
    for stmt in program.body:
        _stmt_lines(stmt, g, 0, lines)
    return "\n".join(lines)


def _stmt_lines(stmt, g: GrammarSpec, depth: int, lines: list[str]) -> None:
    pad = "  " * depth
    t = g.token
    if g.style is Style.BLOCK:
        if isinstance(stmt, ActionStmt):
            lines.append(f"{pad}{t(R.DO)} {_action(stmt.action, g)} {t(R.END)}")
        elif isinstance(stmt, Loop):
            lines.append(f"{pad}{t(R.LOOP)} {_arith(stmt.count, g)} "
                         f"{t(R.TIMES)} {t(R.LBR)}")
            _block_lines(stmt.body, g, depth + 1, lines)
            lines.append(pad + t(R.RBR))
        elif isinstance(stmt, If):
            lines.append(f"{pad}{t(R.IF)} {_cond(stmt.cond, g)} "
                         f"{t(R.THEN)} {t(R.LBR)}")
            _block_lines(stmt.then, g, depth + 1, lines)
            if stmt.orelse is not None:
                lines.append(f"{pad}{t(R.RBR)} {t(R.ELSE)} {t(R.LBR)}")
                _block_lines(stmt.orelse, g, depth + 1, lines)
            lines.append(pad + t(R.RBR))
        else:
            raise TypeError(f"not a statement: {stmt!r}")
    elif g.style is Style.C:
        if isinstance(stmt, ActionStmt):
            lines.append(f"{pad}{_action(stmt.action, g)}{t(R.SEMI)}")
        elif isinstance(stmt, Loop):
            lines.append(f"{pad}{t(R.LOOP)} ({_arith(stmt.count, g)}) "
                         f"{t(R.LBR)}")
            _block_lines(stmt.body, g, depth + 1, lines)
            lines.append(pad + t(R.RBR))
        elif isinstance(stmt, If):
            lines.append(f"{pad}{t(R.IF)} ({_cond(stmt.cond, g)}) {t(R.LBR)}")
            _block_lines(stmt.then, g, depth + 1, lines)
            if stmt.orelse is not None:
                lines.append(f"{pad}{t(R.RBR)} {t(R.ELSE)} {t(R.LBR)}")
                _block_lines(stmt.orelse, g, depth + 1, lines)
            lines.append(pad + t(R.RBR))
        else:
            raise TypeError(f"not a statement: {stmt!r}")
    else:  # S-expressions
        if isinstance(stmt, ActionStmt):
            lines.append(f"{pad}({_action(stmt.action, g)})")
        elif isinstance(stmt, Loop):
            lines.append(f"{pad}({t(R.LOOP)} {_arith(stmt.count, g)}")
            _block_lines(stmt.body, g, depth + 1, lines)
            lines.append(pad + ")")
        elif isinstance(stmt, If):
            lines.append(f"{pad}({t(R.IF)} {_cond(stmt.cond, g)} {t(R.THEN)}")
            _block_lines(stmt.then, g, depth + 1, lines)
            if stmt.orelse is not None:
                lines.append(pad + t(R.ELSE))
                _block_lines(stmt.orelse, g, depth + 1, lines)
            lines.append(pad + ")")
        else:
            raise TypeError(f"not a statement: {stmt!r}")


def _block_lines(block: Block, g: GrammarSpec, depth: int,
                 lines: list[str]) -> None:
    for stmt in block:
        _stmt_lines(stmt, g, depth, lines)


def _action(action: Action, g: GrammarSpec) -> str:
    t = g.token
    if isinstance(action, Move):
        dir_tok = t(R.DIR_FWD if action.dir is MoveDir.FORWARD else R.DIR_BWD)
        if action.steps_omitted:
            return f"{t(R.MOVE)} {dir_tok}"
        return f"{t(R.MOVE)} {dir_tok} {_arith(action.steps, g)}"
    if isinstance(action, Turn):
        dir_tok = t(R.DIR_LEFT if action.dir is TurnDir.LEFT else R.DIR_RIGHT)
        return f"{t(R.TURN)} {dir_tok}"
    if isinstance(action, Grab):
        return f"{t(R.GRAB)} {action.item.render()}"
    raise TypeError(f"not an action: {action!r}")


def _arith(expr: ArithExpr, g: GrammarSpec) -> str:
    t = g.token
    if isinstance(expr, Literal):
        return str(expr.value)
    op_tok = t(R.OP_ADD if expr.op is ArithOp.ADD else R.OP_MUL)
    left, right = _arith(expr.left, g), _arith(expr.right, g)
    if g.style is Style.SEXPR:
        return f"({op_tok} {left} {right})"
    return f"({left} {op_tok} {right})"


def _cond(cond: BoolExpr, g: GrammarSpec) -> str:
    t = g.token
    if g.style is Style.SEXPR:
        if isinstance(cond, Holding):
            return f"({t(R.HOLDING)} {cond.item.render()})"
        if isinstance(cond, Not):
            return f"({t(R.NOT)} {_cond(cond.inner, g)})"
        op_tok = t(R.AND if cond.op is BoolOp.AND else R.OR)
        return f"({op_tok} {_cond(cond.left, g)} {_cond(cond.right, g)})"
    if isinstance(cond, Holding):
        return f"{t(R.HOLDING)} {cond.item.render()}"
    if isinstance(cond, Not):
        return f"{t(R.NOT)} ({_cond(cond.inner, g)})"
    op_tok = t(R.AND if cond.op is BoolOp.AND else R.OR)
    return f"({_cond(cond.left, g)} {op_tok} {_cond(cond.right, g)})"
