"""Layered formulas: abstract syntax, parser and printer.

Grammar (loosest binding first)::

    formula  := quant | iff
    quant    := 'E' NAME '.' formula
    iff      := implies ('<->' implies)*
    implies  := or ('->' implies)?
    or       := and ('|' and)*
    and      := until ('&' until)*
    until    := unary ('U' until)?
    unary    := ('!' | 'X' | 'X0'..'X9' | 'F' | 'G' | 'E' | 'A') unary | quant | atom
    atom     := 'true' | 'false' | NAME | '(' formula ')' | '[' formula ']'

The outer layer talks about the sequence of structures; its atoms are
bracketed inner formulas and names bound by an outer quantifier.  Inside the
brackets, ``E``/``A`` quantify over root-to-leaf paths and ``X0``..``X9`` are
directed next operators.  Operator letters glued together split apart, so
``EX1X0 p`` reads as ``E X1 X0 p`` and ``EFEG p`` as ``E F E G p``; a name
such as ``EFp`` however is a proposition, so separate operators from names.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..core import GranulogError


class FormulaSyntaxError(GranulogError):
    """The text is not a formula; ``offset`` is the 0-based column."""

    def __init__(self, message, offset=None, text=None):
        where = ""
        if offset is not None:
            line = (text or "").count("\n", 0, offset) + 1
            col = offset - (text or "").rfind("\n", 0, offset)
            where = f" at line {line}, column {col}"
        super().__init__(message + where)
        self.offset = offset


class LayeringError(FormulaSyntaxError):
    """An operator or name appears in the wrong layer."""


class Formula:
    __slots__ = ()

    def __str__(self):
        return render(self)


@dataclass(frozen=True, repr=False)
class Const(Formula):
    value: bool

    def __repr__(self):
        return f"Const({self.value})"


@dataclass(frozen=True)
class Prop(Formula):
    name: str


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Iff(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Next(Formula):
    arg: Formula
    direction: int | None = None


@dataclass(frozen=True)
class Eventually(Formula):
    arg: Formula


@dataclass(frozen=True)
class Always(Formula):
    arg: Formula


@dataclass(frozen=True)
class Until(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Exists(Formula):
    """Existential quantification over a proposition."""

    var: str
    body: Formula


@dataclass(frozen=True)
class SomePath(Formula):
    arg: Formula


@dataclass(frozen=True)
class AllPaths(Formula):
    arg: Formula


@dataclass(frozen=True)
class Inner(Formula):
    """A bracketed inner formula used as an outer atom."""

    arg: Formula


TRUE, FALSE = Const(True), Const(False)
BINARY = (And, Or, Implies, Iff, Until)
UNARY = (Not, Next, Eventually, Always, SomePath, AllPaths)


def children(f):
    if isinstance(f, BINARY):
        return (f.left, f.right)
    if isinstance(f, UNARY + (Inner,)):
        return (f.arg,)
    if isinstance(f, Exists):
        return (f.body,)
    return ()


def size(f):
    """Number of operators and atoms; brackets do not count."""
    own = 0 if isinstance(f, Inner) else 1
    return own + sum(size(c) for c in children(f))


def conj(*parts):
    out = None
    for p in parts:
        out = p if out is None else And(out, p)
    return TRUE if out is None else out


def disj(*parts):
    out = None
    for p in parts:
        out = p if out is None else Or(out, p)
    return FALSE if out is None else out


def inner_atoms(f):
    """Bracketed subformulas in first-occurrence order, without repeats."""
    seen = []

    def walk(g):
        if isinstance(g, Inner):
            if g.arg not in seen:
                seen.append(g.arg)
            return
        for c in children(g):
            walk(c)

    walk(f)
    return seen


def free_props(f, bound=frozenset()):
    """Proposition names not captured by a quantifier in the same layer."""
    if isinstance(f, Prop):
        return set() if f.name in bound else {f.name}
    if isinstance(f, Exists):
        return free_props(f.body, bound | {f.var})
    if isinstance(f, Inner):
        return set()
    out = set()
    for c in children(f):
        out |= free_props(c, bound)
    return out


# --------------------------------------------------------------- printing

_LEVEL = {Iff: 1, Implies: 2, Or: 3, And: 4, Until: 5}
_SYMBOL = {Iff: "<->", Implies: "->", Or: "|", And: "&", Until: "U"}


def _prefix(f):
    if isinstance(f, Not):
        return "!"
    if isinstance(f, Next):
        return "X " if f.direction is None else f"X{f.direction} "
    return {Eventually: "F ", Always: "G ", SomePath: "E ", AllPaths: "A "}[type(f)]


def render(f) -> str:
    """Text that parses back to ``f``."""

    def go(g, need):
        if isinstance(g, Const):
            return "true" if g.value else "false"
        if isinstance(g, Prop):
            return g.name
        if isinstance(g, Inner):
            return f"[ {go(g.arg, 0)} ]"
        if isinstance(g, Exists):
            text = f"E{g.var}. {go(g.body, 0)}"
            return text if need == 0 else f"({text})"
        if isinstance(g, UNARY):
            return _prefix(g) + go(g.arg, 6)
        level = _LEVEL[type(g)]
        # -> and U associate to the right, the others to the left
        right_assoc = isinstance(g, (Implies, Until))
        lhs = go(g.left, level + 1 if right_assoc else level)
        rhs = go(g.right, level if right_assoc else level + 1)
        text = f"{lhs} {_SYMBOL[type(g)]} {rhs}"
        return f"({text})" if level < need else text

    return go(f, 0)


# ---------------------------------------------------------------- lexing

_TOKEN = re.compile(r"""
    (?P<space>\s+|\#[^\n]*)
  | (?P<op><->|->|[!&|()\[\]])
  | (?P<quant>E[A-Za-z_][A-Za-z0-9_]*\.)
  | (?P<word>[A-Za-z_][A-Za-z0-9_]*)
""", re.VERBOSE)
_OPERATORS = re.compile(r"(?:E|A|F|G|U|X[0-9]?)+")
_PIECE = re.compile(r"E|A|F|G|U|X[0-9]?")
KEYWORDS = ("true", "false")


def _lex(text):
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", pos, text)
        kind = m.lastgroup
        value = m.group()
        if kind == "quant":
            name = value[1:-1]
            if _OPERATORS.fullmatch(name) or name in KEYWORDS:
                raise FormulaSyntaxError(f"cannot quantify over reserved name {name!r}", pos, text)
            out.append(("quant", name, pos))
        elif kind == "word":
            if _OPERATORS.fullmatch(value):
                for piece in _PIECE.finditer(value):
                    out.append(("op", piece.group(), pos + piece.start()))
            else:
                out.append(("word", value, pos))
        elif kind == "op":
            out.append(("op", value, pos))
        pos = m.end()
    out.append(("end", None, len(text)))
    return out


# ---------------------------------------------------------------- parsing


class _Parser:
    def __init__(self, text, k):
        self.text = text
        self.k = k
        self.tokens = _lex(text)
        self.i = 0
        self.inner = False
        self.outer_bound = []

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message, tok=None, cls=FormulaSyntaxError):
        tok = tok or self.peek()
        return cls(message, tok[2], self.text)

    def expect(self, value):
        tok = self.take()
        if tok[1] != value or tok[0] not in ("op",):
            found = "end of input" if tok[0] == "end" else repr(tok[1])
            raise self.error(f"expected {value!r}, found {found}", tok)
        return tok

    def at(self, *values):
        tok = self.peek()
        return tok[0] == "op" and tok[1] in values

    def formula(self):
        if self.peek()[0] == "quant":
            return self.quant()
        return self.iff()

    def quant(self):
        tok = self.take()
        name = tok[1]
        if not self.inner:
            self.outer_bound.append(name)
        body = self.formula()
        if not self.inner:
            self.outer_bound.pop()
        return Exists(name, body)

    def iff(self):
        f = self.implies()
        while self.at("<->"):
            self.take()
            f = Iff(f, self.implies())
        return f

    def implies(self):
        f = self.or_()
        if self.at("->"):
            self.take()
            return Implies(f, self.implies())
        return f

    def or_(self):
        f = self.and_()
        while self.at("|"):
            self.take()
            f = Or(f, self.and_())
        return f

    def and_(self):
        f = self.until()
        while self.at("&"):
            self.take()
            f = And(f, self.until())
        return f

    def until(self):
        f = self.unary()
        if self.at("U"):
            self.take()
            return Until(f, self.until())
        return f

    def unary(self):
        tok = self.peek()
        if tok[0] == "quant":
            return self.quant()
        if tok[0] == "op" and tok[1] in ("!", "F", "G", "E", "A") or (
                tok[0] == "op" and tok[1].startswith("X")):
            self.take()
            op = tok[1]
            if op in ("E", "A") and not self.inner:
                raise self.error(f"path quantifier {op!r} outside brackets", tok, LayeringError)
            arg = self.unary()
            if op == "!":
                return Not(arg)
            if op == "F":
                return Eventually(arg)
            if op == "G":
                return Always(arg)
            if op == "E":
                return SomePath(arg)
            if op == "A":
                return AllPaths(arg)
            if op == "X":
                return Next(arg)
            d = int(op[1:])
            if not self.inner:
                raise self.error(f"directed next {op!r} outside brackets", tok, LayeringError)
            if self.k is not None and d >= self.k:
                raise self.error(f"direction {d} needs k > {d}, got k = {self.k}", tok)
            return Next(arg, d)
        return self.atom()

    def atom(self):
        tok = self.take()
        kind, value, _ = tok
        if kind == "word":
            if value in KEYWORDS:
                return Const(value == "true")
            if not self.inner and value not in self.outer_bound:
                raise self.error(f"proposition {value!r} outside brackets; write [ {value} ]",
                                 tok, LayeringError)
            return Prop(value)
        if kind == "op" and value == "(":
            f = self.formula()
            self.expect(")")
            return f
        if kind == "op" and value == "[":
            if self.inner:
                raise self.error("brackets cannot nest", tok, LayeringError)
            self.inner = True
            f = self.formula()
            self.inner = False
            self.expect("]")
            return Inner(f)
        found = "end of input" if kind == "end" else repr(value)
        raise self.error(f"unexpected {found}", tok)


def _binders(f, scope=()):
    if isinstance(f, Exists):
        if f.var in scope:
            raise LayeringError(f"name {f.var!r} is quantified inside its own scope")
        scope = scope + (f.var,)
        yield f.var
    for c in children(f):
        yield from _binders(c, scope)


def _check_names(f):
    """No quantifier shadows another, and bound names never occur free."""
    names = set(_binders(f))
    free = free_props(f)
    for atom in inner_atoms(f):
        free |= free_props(atom)
    clash = free & names
    if clash:
        raise LayeringError(f"name {min(clash)!r} is both quantified and free")


def parse_formula(text: str, k: int | None = None, inner: bool = False) -> Formula:
    """Parse a layered formula; ``inner=True`` parses a bare inner formula."""
    p = _Parser(text, k)
    p.inner = inner
    f = p.formula()
    tok = p.peek()
    if tok[0] != "end":
        raise p.error(f"unexpected {tok[1]!r}")
    _check_names(f)
    return f
