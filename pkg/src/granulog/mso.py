"""Monadic second-order view of tree-sequence automata.

Two directions are covered.  ``mso_atomic`` builds temporalized automata
for the atomic relations of set-variable MSO over tree sequences whose
nodes carry bit vectors X1..Xn.  ``emit_mso`` writes a temporalized
automaton with Rabin inner automata as an MSO sentence stating that an
accepting combined run exists; ``check_mso_syntax`` parses that text.

Concrete syntax (one sentence, optionally preceded by definitions)::

    document   := { "let" NAME "(" var ")" ":=" formula ";" } formula ";"
    formula    := quantified | implies
    quantified := ("ex1" | "all1") var "." formula
                | ("ex2" | "all2") SET "." formula
    implies    := disj [ "->" formula ]
    disj       := conj { "|" conj }
    conj       := unary { "&" unary }
    unary      := "~" unary | "(" formula ")" | quantified | atom
    atom       := "true" | "false" | "T0" "(" term ")"
                | "Path" "(" SET "," term ")" | NAME "(" term ")"
                | term ("in" SET | "<1" term | "<2" term | "<=2" term)
    term       := var | "first" | "succ" "(" term ")" | "down" DIGITS "(" term ")"

First-order variables start with a lower-case letter, set variables with
an upper-case letter.  ``first`` is the first point of the coarsest
layer, ``succ`` the next point of the coarsest layer and ``downI`` the
i-th child.  Set names starting with ``P_`` are the free label
predicates.  ``#`` starts a comment running to the end of the line.
"""

from __future__ import annotations

import re

from . import buchi, ftree, rabin
from .core import CapabilityError, Cube, PropSet, SymbolTable
from .temporalized import TemporalizedAutomaton

# ------------------------------------------------------- atomic automata

ATOMIC_KINDS = ("subset", "proj", "succ")


def bit_alphabet(n):
    """Propositions X1..Xn; a letter is the set of variables containing the node."""
    return PropSet([f"X{i}" for i in range(1, n + 1)])


def _guard(on=(), off=()):
    g = Cube(on, off)
    return g if g.consistent() else None


class _Parts:
    """Guard vocabulary for one atomic relation between X_i and X_j."""

    def __init__(self, i, j):
        xi, xj = f"X{i}", f"X{j}"
        self.zero = _guard(off=(xi, xj))
        self.only_i = _guard((xi,), (xj,))
        self.only_j = _guard((xj,), (xi,))
        self.xi, self.xj = xi, xj


def _rabin_inner(k, alphabet, transitions, accepting, states, initial=0):
    trans = [(q, g, cs) for q, g, cs in transitions if g is not None]
    return rabin.RabinTreeAutomaton(k, states, initial, trans, [((), accepting)], alphabet)


def _fta_inner(k, mode, alphabet, states, leaf, internal, accepting):
    """Finite tree automaton whose state 0 reads unmarked subtrees.

    An almost-tree root lacks child 0, so its rules are the full rules that
    expect an unmarked child 0, with that child dropped.
    """
    leaf = [(q, g) for q, g in leaf if g is not None]
    internal = [(q, g, cs) for q, g, cs in internal if g is not None]
    root = [(q, g, cs[1:]) for q, g, cs in internal if cs[0] == 0] if mode == "almost" else []
    return ftree.TreeAutomaton(k, states, leaf, internal, accepting, alphabet, mode, root)


def _zero_everywhere(parts, k, alphabet, inner, mode):
    """Trees where neither X_i nor X_j marks any node (the zeta automaton)."""
    if inner == "rabin":
        return _rabin_inner(k, alphabet, [(0, parts.zero, (0,) * k)], (0,), 1)
    return _fta_inner(k, mode, alphabet, 1, [(0, parts.zero)],
                      [(0, parts.zero, (0,) * k)], {0})


def _subset(parts, k, alphabet, inner, mode):
    rules = [_guard(off=(parts.xi,)), _guard(on=(parts.xj,))]
    if inner == "rabin":
        return _rabin_inner(k, alphabet, [(0, g, (0,) * k) for g in rules], (0,), 1)
    return _fta_inner(k, mode, alphabet, 1, [(0, g) for g in rules],
                      [(0, g, (0,) * k) for g in rules], {0})


def _root_mark(parts, k, alphabet, inner, mode, at_root):
    """Trees whose root is marked ``at_root`` and every other node is unmarked."""
    mark = parts.only_i if at_root == "i" else parts.only_j
    if inner == "rabin":
        trans = [(0, mark, (1,) * k), (1, parts.zero, (1,) * k)]
        return _rabin_inner(k, alphabet, trans, (1,), 2)
    # state 0: unmarked subtree, state 1: marked root over unmarked subtrees
    leaf = [(0, parts.zero), (1, mark)]
    internal = [(0, parts.zero, (0,) * k), (1, mark, (0,) * k)]
    return _fta_inner(k, mode, alphabet, 2, leaf, internal, {1})


def _projection_pair(parts, k, m, alphabet, inner, mode):
    """X_i = {x}, X_j = {y} and y is the m-th child of x, inside one tree."""
    zero, only_i, only_j = parts.zero, parts.only_i, parts.only_j
    if inner == "rabin":
        # 0 searching for x, 1 at y, 2 unmarked below
        trans = [(2, zero, (2,) * k), (1, only_j, (2,) * k)]
        trans.append((0, only_i, tuple(1 if d == m else 2 for d in range(k))))
        for d in range(k):
            trans.append((0, zero, tuple(0 if e == d else 2 for e in range(k))))
        return _rabin_inner(k, alphabet, trans, (1, 2), 3)
    # 0 unmarked, 1 subtree rooted at y, 2 subtree containing the pair
    leaf = [(0, zero), (1, only_j)]
    internal = [(0, zero, (0,) * k), (1, only_j, (0,) * k)]
    internal.append((2, only_i, tuple(1 if d == m else 0 for d in range(k))))
    for d in range(k):
        internal.append((2, zero, tuple(2 if e == d else 0 for e in range(k))))
    return _fta_inner(k, mode, alphabet, 3, leaf, internal, {2})


def mso_atomic(kind, i, j, n, k=2, m=None, inner="rabin", mode="complete"):
    """Temporalized automaton for an atomic set-variable relation.

    ``subset``: X_i is a subset of X_j at every node of every tree.
    ``proj``: X_i = {x}, X_j = {y} and y is the m-th child of x.
    ``succ``: X_i = {x}, X_j = {y}, both roots and y is the tree after x.
    Only the bits of X_i and X_j are constrained; other variables are free.
    ``inner`` is ``"rabin"`` (infinite trees) or ``"ftree"`` (finite trees,
    ``mode`` complete or almost).
    """
    if kind not in ATOMIC_KINDS:
        raise ValueError(f"unknown atomic relation {kind!r}")
    if not (1 <= i <= n and 1 <= j <= n):
        raise ValueError(f"variable indices must lie in 1..{n}")
    if inner not in ("rabin", "ftree"):
        raise CapabilityError(f"atomic automata need tree inner automata, not {inner!r}")
    if kind == "proj" and (m is None or not 0 <= m < k):
        raise ValueError(f"projection direction must lie in 0..{k - 1}")
    alphabet = bit_alphabet(n)
    parts = _Parts(i, j)
    zeta = _zero_everywhere(parts, k, alphabet, inner, mode)
    if kind == "subset":
        table = {"subset": _subset(parts, k, alphabet, inner, mode)}
        trans, states, final = [(0, "subset", 0)], 1, {0}
    elif kind == "proj":
        table = {"zeta": zeta, f"proj{m}": _projection_pair(parts, k, m, alphabet, inner, mode)}
        trans = [(0, "zeta", 0), (0, f"proj{m}", 1), (1, "zeta", 1)]
        states, final = 2, {1}
    else:
        table = {"zeta": zeta,
                 "alpha_i": _root_mark(parts, k, alphabet, inner, mode, "i"),
                 "alpha_j": _root_mark(parts, k, alphabet, inner, mode, "j")}
        trans = [(0, "zeta", 0), (0, "alpha_i", 1), (1, "alpha_j", 2), (2, "zeta", 2)]
        states, final = 3, {2}
    outer = buchi.BuchiAutomaton(states, 0, trans, final, SymbolTable(sorted(table)))
    return TemporalizedAutomaton(outer, table)


# ----------------------------------------------------------------- emitter


def _ident(name):
    return re.sub(r"[^A-Za-z0-9_]", "_", str(name))


def _and(parts):
    parts = [p for p in parts if p != "true"]
    if "false" in parts:
        return "false"
    if not parts:
        return "true"
    return parts[0] if len(parts) == 1 else "(" + " & ".join(parts) + ")"


def _or(parts):
    parts = [p for p in parts if p != "false"]
    if "true" in parts:
        return "true"
    if not parts:
        return "false"
    return parts[0] if len(parts) == 1 else "(" + " | ".join(parts) + ")"


def _letter(alphabet, guard, var):
    """Formula saying node ``var`` carries a letter allowed by ``guard``."""
    if alphabet.propositional:
        return _and([f"{var} in P_{_ident(p)}" for p in sorted(guard.pos)]
                    + [f"~{var} in P_{_ident(p)}" for p in sorted(guard.neg)])
    return f"{var} in P_{_ident(guard)}"


def _disjoint(sets, var):
    return [f"~(ex1 {var}. ({var} in {a} & {var} in {b}))"
            for n, a in enumerate(sets) for b in sets[n + 1:]]


def _rac_block(name, index, z: rabin.RabinTreeAutomaton):
    ys = [f"Y{index}_{q}" for q in range(z.states)]
    body = [f"all1 y. (y in {v} -> x <=2 y)" for v in ys]
    body.append(f"x in {ys[z.initial]}")
    body += _disjoint(ys, "y")
    moves = []
    for q, g, cs in z.transitions:
        move = [f"y in {ys[q]}", _letter(z.alphabet, g, "y")]
        move += [f"down{d}(y) in {ys[c]}" for d, c in enumerate(cs)]
        moves.append(_and(move))
    body.append(f"all1 y. (x <=2 y -> {_or(moves)})")
    pairs = []
    for lo, hi in z.pairs:
        finitely = [f"(ex1 u. (u in W & (all1 v. ((v in W & u <2 v) -> ~v in {ys[q]}))))"
                    for q in sorted(lo)]
        infinitely = [f"(all1 u. (u in W -> (ex1 v. (v in W & u <2 v & v in {ys[q]}))))"
                      for q in sorted(hi)]
        pairs.append(_and(finitely + [_or(infinitely)]))
    body.append(f"all2 W. (Path(W, x) -> {_or(pairs)})")
    quant = "".join(f"ex2 {v}. " for v in ys)
    lines = [f"# run of inner automaton {name!r}",
             f"let RAC_{index}(x) := {quant}(", "    " + " &\n    ".join(body), ");"]
    return "\n".join(lines)


def emit_mso(a: TemporalizedAutomaton) -> str:
    """MSO sentence whose models are the tree sequences accepted by ``a``."""
    if a.cls.name != "rabin":
        raise CapabilityError("the MSO emitter expects Rabin inner automata")
    outer = a.outer
    names = a.names
    qs = {n: f"Q{i}" for i, n in enumerate(names)}
    xs = [f"X{q}" for q in range(outer.states)]
    blocks = [_rac_block(n, i, a.inner[n]) for i, n in enumerate(names)]
    body = [f"all1 x. (x in {v} -> T0(x))" for v in xs]
    body += [f"all1 x. (x in {qs[n]} -> T0(x))" for n in names]
    body.append(f"first in {xs[outer.initial]}")
    body += _disjoint(xs, "y")
    steps = [_and([f"x in {xs[q]}", f"x in {qs[g]}", f"succ(x) in {xs[r]}"])
             for q, g, r in outer.transitions]
    body.append(f"all1 x. (T0(x) -> {_or(steps)})")
    recur = [f"(all1 x. (T0(x) -> (ex1 y. (T0(y) & x <1 y & y in {xs[q]}))))"
             for q in sorted(outer.final)]
    body.append(_or(recur))
    body += [f"all1 x. (x in {qs[n]} -> RAC_{i}(x))" for i, n in enumerate(names)]
    quant = "".join(f"ex2 {qs[n]}. " for n in names) + "".join(f"ex2 {v}. " for v in xs)
    head = ["# combined run: X<q> marks outer state q, Q<i> marks label i",
            *(f"#   Q{i} = {n}" for i, n in enumerate(names))]
    main = f"{quant}(\n    " + " &\n    ".join(body) + "\n);"
    return "\n".join(head + blocks + [main]) + "\n"


# ---------------------------------------------------------- syntax checker


class MSOSyntaxError(ValueError):
    def __init__(self, message, line, column):
        super().__init__(f"{message} at line {line}, column {column}")
        self.line, self.column = line, column


_TOKEN = re.compile(r"""
    (?P<space>[ \t\r]+|\#[^\n]*)
  | (?P<newline>\n)
  | (?P<op>:=|->|<=2|<1|<2|[()~&|.,;])
  | (?P<word>[A-Za-z_][A-Za-z0-9_]*)
""", re.VERBOSE)

_KEYWORDS = {"let", "ex1", "all1", "ex2", "all2", "in", "true", "false", "first", "succ",
             "T0", "Path"}


def _tokens(text):
    line, start = 1, 0
    pos = 0
    out = []
    while pos < len(text):
        mt = _TOKEN.match(text, pos)
        if not mt:
            raise MSOSyntaxError(f"unexpected character {text[pos]!r}", line, pos - start + 1)
        kind = mt.lastgroup
        if kind == "newline":
            line, start = line + 1, mt.end()
        elif kind != "space":
            out.append((mt.group(), line, pos - start + 1))
        pos = mt.end()
    out.append(("<end>", line, pos - start + 1))
    return out


class _Parser:
    def __init__(self, text):
        self.toks = _tokens(text)
        self.i = 0
        self.macros = set()

    def peek(self, offset=0):
        return self.toks[min(self.i + offset, len(self.toks) - 1)][0]

    def fail(self, message):
        _, line, col = self.toks[self.i]
        raise MSOSyntaxError(message, line, col)

    def take(self, expected=None):
        tok = self.peek()
        if expected is not None and tok != expected:
            self.fail(f"expected {expected!r}, found {tok!r}")
        self.i += 1
        return tok

    def name(self, upper, scope):
        tok = self.peek()
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", tok) or tok in _KEYWORDS:
            self.fail(f"expected a variable, found {tok!r}")
        if tok[0].isupper() != upper:
            self.fail(f"{tok!r} is not a {'set' if upper else 'first-order'} variable")
        if scope is not None and tok not in scope and not (upper and tok.startswith("P_")):
            self.fail(f"unbound variable {tok!r}")
        return self.take()

    def document(self):
        while self.peek() == "let":
            self.take()
            macro = self.take()
            if not re.fullmatch(r"[A-Z][A-Za-z0-9_]*", macro) or macro in _KEYWORDS:
                self.fail(f"bad definition name {macro!r}")
            self.take("(")
            var = self.name(False, None)
            self.take(")")
            self.take(":=")
            self.formula({var})
            self.take(";")
            self.macros.add(macro)
        self.formula(set())
        self.take(";")
        if self.peek() != "<end>":
            self.fail("text after the sentence")

    def formula(self, scope):
        if self.peek() in ("ex1", "all1", "ex2", "all2"):
            q = self.take()
            var = self.name(q.endswith("2"), None)
            self.take(".")
            return self.formula(scope | {var})
        self.disj(scope)
        if self.peek() == "->":
            self.take()
            self.formula(scope)

    def disj(self, scope):
        self.conj(scope)
        while self.peek() == "|":
            self.take()
            self.conj(scope)

    def conj(self, scope):
        self.unary(scope)
        while self.peek() == "&":
            self.take()
            self.unary(scope)

    def unary(self, scope):
        tok = self.peek()
        if tok == "~":
            self.take()
            self.unary(scope)
        elif tok in ("ex1", "all1", "ex2", "all2"):
            self.formula(scope)
        elif tok == "(":
            self.take()
            self.formula(scope)
            self.take(")")
        else:
            self.atom(scope)

    def atom(self, scope):
        tok = self.peek()
        if tok in ("true", "false"):
            self.take()
        elif tok == "T0":
            self.take()
            self.take("(")
            self.term(scope)
            self.take(")")
        elif tok == "Path":
            self.take()
            self.take("(")
            self.name(True, scope)
            self.take(",")
            self.term(scope)
            self.take(")")
        elif tok[:1].isupper() and self.peek(1) == "(":
            if tok not in self.macros:
                self.fail(f"undefined predicate {tok!r}")
            self.take()
            self.take("(")
            self.term(scope)
            self.take(")")
        else:
            self.term(scope)
            rel = self.take()
            if rel == "in":
                self.name(True, scope)
            elif rel in ("<1", "<2", "<=2"):
                self.term(scope)
            else:
                self.i -= 1
                self.fail(f"expected a relation, found {rel!r}")

    def term(self, scope):
        tok = self.peek()
        if tok == "first":
            self.take()
        elif tok == "succ" or re.fullmatch(r"down[0-9]+", tok):
            self.take()
            self.take("(")
            self.term(scope)
            self.take(")")
        else:
            self.name(False, scope)


def check_mso_syntax(text):
    """Parse ``text`` in the emitter's syntax; raises MSOSyntaxError when malformed.

    Besides the grammar, every variable must be bound and every predicate
    call must refer to an earlier definition.
    """
    _Parser(text).document()
    return True
