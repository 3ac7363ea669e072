"""From layered formulas to temporalized automata, and satisfiability."""

from __future__ import annotations

import re
from dataclasses import dataclass, fields, replace
from typing import NamedTuple

from .. import buchi, ftree
from ..core import (
    AlmostKTree, FiniteKTree, FragmentError, GranulogError, LassoTreeSeq, LassoWord, PropSet,
    SchemaError, SymbolTable,
)
from ..temporalized import TemporalizedAutomaton, its_empty, t_empty
from .ltl import eval_lasso, lasso_truth, pltl_to_buchi
from .syntax import (
    Formula, Inner, Not, Prop, conj, disj, free_props, inner_atoms,
)
from .trees import eval_tree, pathctl_to_fta

KINDS = ("seq-of-seq", "layered", "uuls")


@dataclass(frozen=True)
class Semantics:
    """Which sequences of structures a formula talks about.

    ``seq-of-seq``: sequences of infinite words; ``layered``: sequences of
    complete k-ary trees of height ``depth``; ``uuls``: increasing sequences
    of almost k-ary trees, the i-th of height i.
    """

    kind: str
    k: int | None = None
    depth: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"semantics must be one of {KINDS}, got {self.kind!r}")
        if self.kind == "seq-of-seq":
            if self.k is not None or self.depth is not None:
                raise SchemaError("seq-of-seq takes no parameters")
            return
        if self.k is None or self.k < 2:
            raise SchemaError(f"{self.kind} needs k >= 2")
        if self.kind == "layered" and (self.depth is None or self.depth < 0):
            raise SchemaError("layered needs depth >= 0")
        if self.kind == "uuls" and self.depth is not None:
            raise SchemaError("uuls takes no depth")

    @classmethod
    def parse(cls, text: str) -> "Semantics":
        """Read ``seq-of-seq``, ``layered:k=3,depth=3`` or ``uuls:k=2``."""
        name, _, params = text.strip().partition(":")
        values = {}
        for item in filter(None, params.split(",")):
            m = re.fullmatch(r"\s*(k|depth)\s*=\s*(\d+)\s*", item)
            if not m:
                raise SchemaError(f"bad semantics parameter {item!r}")
            values[m.group(1)] = int(m.group(2))
        return cls(name, **values)

    def __str__(self):
        if self.kind == "layered":
            return f"layered:k={self.k},depth={self.depth}"
        if self.kind == "uuls":
            return f"uuls:k={self.k}"
        return self.kind

    @property
    def element(self):
        return {"seq-of-seq": LassoWord, "layered": FiniteKTree, "uuls": AlmostKTree}[self.kind]

    def compile_inner(self, f):
        """Inner automaton for one inner formula."""
        if self.kind == "seq-of-seq":
            return pltl_to_buchi(f, sorted(free_props(f)))
        if self.kind == "layered":
            return pathctl_to_fta(f, self.k, "complete", self.depth)
        return pathctl_to_fta(f, self.k, "almost")

    def universal(self):
        if self.kind == "seq-of-seq":
            return buchi.universal(PropSet())
        if self.kind == "layered":
            return ftree.fta_shape(self.k, self.depth, PropSet())
        return ftree.universal_fta(self.k, PropSet(), "almost")

    def intersect(self, a, b):
        if self.kind == "seq-of-seq":
            return buchi.buchi_intersect(a, b)
        return ftree.reachable_trim(ftree.fta_intersect(a, b))

    def is_empty(self, a):
        if self.kind == "seq-of-seq":
            return buchi.buchi_empty(a)[0]
        return ftree.fta_empty(a)[0]


# ------------------------------------------------------------ evaluation


def eval_formula(f: Formula, m: LassoTreeSeq, position: int = 0) -> bool:
    """Truth of a layered formula at ``position`` of a sequence model.

    Bracketed formulas are decided on the element at each position: as
    linear-time formulas on words, or as state formulas at tree roots.
    """
    if not isinstance(m, LassoTreeSeq):
        raise SchemaError("a layered formula is evaluated on a sequence of structures")
    cache = {}

    def atom(g, i):
        if not isinstance(g, Inner):
            raise FragmentError(f"proposition {g.name!r} is not bound in the outer layer")
        x = m[i]
        key = (g.arg, id(x))
        if key not in cache:
            if isinstance(x, LassoWord):
                cache[key] = eval_lasso(g.arg, x)
            elif isinstance(x, (FiniteKTree, AlmostKTree)):
                cache[key] = eval_tree(g.arg, x)
            else:
                raise SchemaError(f"cannot evaluate formulas on {type(x).__name__} elements")
        return cache[key]

    v = lasso_truth(f, len(m.stem), len(m.loop), atom)
    i = position
    if i >= len(v):
        i = len(m.stem) + (i - len(m.stem)) % len(m.loop)
    return v[i]


# --------------------------------------------------------- partitioning


class Cell(NamedTuple):
    name: str
    signs: tuple
    formula: Formula
    automaton: object


class Partition(NamedTuple):
    """Satisfiable sign patterns of the bracketed formulas.

    ``cells`` holds every pattern with at least one positive sign; ``beta``
    is the all-negative pattern or None when it is unsatisfiable;
    ``formula`` is the outer formula over the cell names.
    """

    atoms: list
    cells: list
    beta: Cell | None
    formula: Formula

    def all_cells(self):
        return self.cells + ([self.beta] if self.beta else [])


BETA = "#rest"


def partition_formulas(f: Formula, sem: Semantics) -> Partition:
    atoms = inner_atoms(f)
    positive = [sem.compile_inner(a) for a in atoms]
    negative = [sem.compile_inner(Not(a)) for a in atoms]
    found = [((), sem.universal())]
    for pos, neg in zip(positive, negative):
        grown = []
        for signs, a in found:
            for sign, b in ((True, pos), (False, neg)):
                c = sem.intersect(a, b)
                if not sem.is_empty(c):
                    grown.append((signs + (sign,), c))
        found = grown
    cells, beta = [], None
    for signs, a in found:
        formula = conj(*(x if s else Not(x) for x, s in zip(atoms, signs)))
        if any(signs):
            cells.append(Cell(f"#{len(cells)}", signs, formula, a))
        else:
            beta = Cell(BETA, signs, formula, a)
    table = {x: disj(*(Prop(c.name) for c in cells if c.signs[i]))
               for i, x in enumerate(atoms)}
    return Partition(atoms, cells, beta, _substitute(f, table))


def _substitute(f, table):
    if isinstance(f, Inner):
        return table[f.arg]
    parts = {fld.name: _substitute(getattr(f, fld.name), table) for fld in fields(f)
             if isinstance(getattr(f, fld.name), Formula)}
    return replace(f, **parts) if parts else f


# ------------------------------------------------------------ compilation


def compile_formula(f: Formula, sem: Semantics) -> TemporalizedAutomaton:
    """Temporalized automaton whose models (within ``sem``) satisfy ``f``.

    Each outer letter names exactly one partition cell, so a letter set of
    the outer Büchi automaton collapses to the single cell it contains.
    """
    part = partition_formulas(f, sem)
    cells = part.all_cells()
    if not cells:
        raise GranulogError("the semantics admits no structure at all")
    names = [c.name for c in cells]
    b = pltl_to_buchi(part.formula, names)
    matches = b.alphabet.matches
    trans = [(q, n, r) for q, g, r in b.transitions for n in names
             if matches(g, frozenset([n]))]
    outer = buchi.trim(buchi.BuchiAutomaton(b.states, b.initial, trans, b.final,
                                            SymbolTable(names)))
    return TemporalizedAutomaton(outer, {c.name: c.automaton for c in cells})


class SatResult(NamedTuple):
    verdict: str
    witness: object
    automaton: TemporalizedAutomaton


def sat_check(f: Formula, sem: Semantics) -> SatResult:
    """SAT with a witness (a lasso model, or an ITS certificate under uuls) or UNSAT."""
    a = compile_formula(f, sem)
    if sem.kind == "uuls":
        empty, cert = its_empty(a)
        return SatResult("UNSAT" if empty else "SAT", cert, a)
    empty, witness = t_empty(a)
    return SatResult("UNSAT" if empty else "SAT", witness, a)
