"""Temporalized automata: outer Büchi automata whose letters name inner automata.

A model is an ultimately periodic sequence of inner objects (lasso words,
finite trees or regular infinite trees).  It is accepted when some
accepting run of the outer automaton reads, at every position i, the name
of an inner automaton that accepts the i-th object.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

from . import buchi, ftree, rabin
from .core import (
    AlmostKTree, AlphabetMismatch, ArityError, CapabilityError, FiniteKTree, LassoTreeSeq,
    LassoWord, RegularTree, SchemaError, SymbolTable, dumps, loads, require_same_alphabet,
)
from .periodic import eps_contains_ap, eps_member, eps_to_json, eps_union

# ------------------------------------------------------------ inner classes


@dataclass(frozen=True)
class InnerClass:
    """What an inner automaton class can do, plus the functions doing it."""

    name: str
    element: type
    has_boolean: bool
    has_emptiness: bool
    has_membership: bool
    has_height_set: bool
    has_union: bool
    has_projection: bool
    member: Callable = field(repr=False, compare=False)
    empty: Callable = field(repr=False, compare=False)
    union: Callable = field(repr=False, compare=False)
    intersect: Callable | None = field(default=None, repr=False, compare=False)
    complement: Callable | None = field(default=None, repr=False, compare=False)
    project: Callable | None = field(default=None, repr=False, compare=False)
    height_set: Callable | None = field(default=None, repr=False, compare=False)
    to_json: Callable | None = field(default=None, repr=False, compare=False)


BUCHI = InnerClass("buchi", LassoWord, True, True, True, False, True, True,
                   buchi.buchi_member, buchi.buchi_empty, buchi.buchi_union,
                   buchi.buchi_intersect, buchi.buchi_complement, buchi.buchi_project,
                   None, buchi.buchi_to_json)
FTREE = InnerClass("ftree", FiniteKTree, True, True, True, True, True, True,
                   ftree.fta_member, ftree.fta_empty, ftree.fta_union, ftree.fta_intersect,
                   ftree.fta_complement, ftree.fta_project, ftree.fta_height_set,
                   ftree.fta_to_json)
RABIN = InnerClass("rabin", RegularTree, False, True, True, False, True, True,
                   rabin.rabin_member, rabin.rabin_empty, rabin.rabin_union,
                   None, None, rabin.rabin_project, None, rabin.rabin_to_json)


def inner_class(automaton) -> InnerClass:
    if isinstance(automaton, buchi.BuchiAutomaton):
        return BUCHI
    if isinstance(automaton, ftree.TreeAutomaton):
        return FTREE
    if isinstance(automaton, rabin.RabinTreeAutomaton):
        return RABIN
    raise TypeError(f"not an inner automaton: {automaton!r}")


def _shape(automaton):
    """Structural key that inner automata of one table must share."""
    if isinstance(automaton, ftree.TreeAutomaton):
        return ("ftree", automaton.k, automaton.mode)
    if isinstance(automaton, rabin.RabinTreeAutomaton):
        return ("rabin", automaton.k)
    return ("buchi",)


def element_type(automaton):
    if isinstance(automaton, ftree.TreeAutomaton):
        return AlmostKTree if automaton.almost else FiniteKTree
    return inner_class(automaton).element


def inner_from_json(data, where="$"):
    kind = data.get("kind") if isinstance(data, dict) else None
    if kind == "buchi":
        return buchi.buchi_from_json(data, where)
    if kind == "ftree":
        return ftree.fta_from_json(data, where)
    if kind == "rabin":
        return rabin.rabin_from_json(data, where)
    raise SchemaError(f"unknown inner automaton kind {kind!r}", where)


# ------------------------------------------------------------- the object


class TemporalizedAutomaton:
    """Outer Büchi automaton over inner-automaton names plus the name table."""

    def __init__(self, outer: buchi.BuchiAutomaton, inner: dict):
        if outer.alphabet.propositional:
            raise SchemaError("the outer alphabet must be a table of inner names")
        missing = [n for n in outer.alphabet.names if n not in inner]
        if missing:
            raise SchemaError(f"no inner automaton for {missing}")
        inner = {n: inner[n] for n in sorted(inner)}
        if not inner:
            raise SchemaError("empty inner table")
        shapes = {_shape(a) for a in inner.values()}
        if len(shapes) != 1:
            raise ArityError(f"inner automata differ in class or shape: {sorted(shapes)}")
        first = next(iter(inner.values()))
        for a in inner.values():
            require_same_alphabet(first.alphabet, a.alphabet)
            if not first.alphabet.propositional and a.alphabet != first.alphabet:
                raise AlphabetMismatch("inner symbol tables differ")
        self.outer = outer
        self.inner = inner
        self._verdicts = {}

    @property
    def cls(self) -> InnerClass:
        return inner_class(next(iter(self.inner.values())))

    @property
    def element(self):
        return element_type(next(iter(self.inner.values())))

    @property
    def names(self):
        return list(self.inner)

    def __eq__(self, other):
        return (isinstance(other, TemporalizedAutomaton) and t_dumps(self) == t_dumps(other))

    def __hash__(self):
        return hash(t_dumps(self))

    def __repr__(self):
        return (f"TemporalizedAutomaton(outer_states={self.outer.states}, "
                f"labels={self.names})")


def _require(a: TemporalizedAutomaton, *caps):
    cls = a.cls
    for cap in caps:
        if not getattr(cls, cap):
            raise CapabilityError(f"{cls.name} inner automata lack {cap.removeprefix('has_')}")


def _with_names(outer: buchi.BuchiAutomaton, names):
    """Same transition system read over a (larger) name table."""
    return buchi.BuchiAutomaton(outer.states, outer.initial, outer.transitions, outer.final,
                                SymbolTable(sorted(names)))


def abstraction(a: TemporalizedAutomaton) -> buchi.BuchiAutomaton:
    return a.outer


def concretization(b: buchi.BuchiAutomaton, table) -> TemporalizedAutomaton:
    missing = [n for n in b.alphabet.names if n not in table]
    if missing:
        raise SchemaError(f"no table entry for {missing}")
    used = {n: table[n] for n in b.alphabet.names}
    return TemporalizedAutomaton(b, used)


# ---------------------------------------------------------- membership


def _check_model(a: TemporalizedAutomaton, m):
    if not isinstance(m, LassoWord):
        raise SchemaError("model must be a lasso sequence of inner objects")
    want = a.element
    for x in m.stem + m.loop:
        if not isinstance(x, want):
            raise ArityError(f"{a.cls.name} inner automata read {want.__name__} elements, "
                             f"got {type(x).__name__}")


_VERDICT_CACHE = 4096  # inner objects remembered per automaton


def membership_table(a: TemporalizedAutomaton, m):
    """For each lasso position, the set of names whose automaton accepts it."""
    _require(a, "has_membership")
    _check_model(a, m)
    member = a.cls.member
    cache = a._verdicts
    if len(cache) > _VERDICT_CACHE:
        cache.clear()
    out = []
    for x in m.stem + m.loop:
        if x not in cache:
            cache[x] = frozenset(n for n, inner in a.inner.items() if member(inner, x))
        out.append(cache[x])
    return out


def t_member(a: TemporalizedAutomaton, m) -> bool:
    """Does some accepting outer run label every position with an accepting inner name?"""
    table = membership_table(a, m)
    word = LassoWord(table[:len(m.stem)], table[len(m.stem):])
    return buchi.accepting_run(a.outer, word, enabled=lambda name, ok: name in ok) is not None


# ---------------------------------------------------- alphabet partition


def _pattern_name(pattern):
    return "&".join(n if keep else "!" + n for n, keep in pattern)


def partition_cells(a: TemporalizedAutomaton):
    """Nonempty sign-pattern intersections of the inner languages.

    Returns a list of (pattern, automaton) where a pattern is a tuple of
    (name, included) pairs.  The cells are pairwise disjoint and cover
    every inner object.
    """
    _require(a, "has_boolean", "has_emptiness")
    cls = a.cls
    cells = None
    for name, x in a.inner.items():
        nx = cls.complement(x)
        if cells is None:
            parts = [(((name, True),), x), (((name, False),), nx)]
        else:
            parts = []
            for pattern, c in cells:
                parts.append((pattern + ((name, True),), cls.intersect(c, x)))
                parts.append((pattern + ((name, False),), cls.intersect(c, nx)))
        cells = [(p, c) for p, c in parts if not cls.empty(c)[0]]
    return cells


def partition_alphabet(a: TemporalizedAutomaton) -> TemporalizedAutomaton:
    """Equivalent automaton whose inner languages partition all inner objects."""
    cells = partition_cells(a)
    table = {_pattern_name(p): c for p, c in cells}
    trans = []
    for q, name, r in a.outer.transitions:
        for p, _ in cells:
            if (name, True) in p:
                trans.append((q, _pattern_name(p), r))
    outer = buchi.BuchiAutomaton(a.outer.states, a.outer.initial, trans, a.outer.final,
                                 SymbolTable(sorted(table)))
    return TemporalizedAutomaton(outer, table)


# ---------------------------------------------------------- Boolean ops


def _merge_tables(a, b):
    """Union of both name tables, renaming clashes in ``b``."""
    table = dict(a.inner)
    rename = {}
    for n, x in b.inner.items():
        new = n
        i = 1
        while new in table and table[new] != x:
            new = f"{n}'{i}" if i > 1 else f"{n}'"
            i += 1
        table[new] = x
        rename[n] = new
    return table, rename


def _renamed(outer, rename, names):
    trans = [(q, rename[g], r) for q, g, r in outer.transitions]
    return buchi.BuchiAutomaton(outer.states, outer.initial, trans, outer.final,
                                SymbolTable(sorted(names)))


def t_union(a: TemporalizedAutomaton, b: TemporalizedAutomaton):
    if _shape(next(iter(a.inner.values()))) != _shape(next(iter(b.inner.values()))):
        raise ArityError("inner automata differ in class or shape")
    table, rename = _merge_tables(a, b)
    oa = _with_names(a.outer, table)
    ob = _renamed(b.outer, rename, table)
    return TemporalizedAutomaton(buchi.buchi_union(oa, ob), table)


def t_complement(a: TemporalizedAutomaton, **options):
    """Complement the abstraction of the partitioned automaton."""
    p = partition_alphabet(a)
    comp = buchi.buchi_complement(p.outer, **options)
    comp = _with_names(comp, p.inner)
    return TemporalizedAutomaton(comp, p.inner)


def t_intersect(a: TemporalizedAutomaton, b: TemporalizedAutomaton, method="product"):
    """Intersection of the combined languages.

    The default builds the product of the outer automata and labels each
    product transition with the intersection of the two inner automata.
    ``method="demorgan"`` goes through union and complementation instead.
    """
    _require(a, "has_boolean", "has_emptiness")
    if method == "demorgan":
        return t_complement(t_union(t_complement(a), t_complement(b)))
    if method != "product":
        raise ValueError(f"unknown intersection method {method!r}")
    if _shape(next(iter(a.inner.values()))) != _shape(next(iter(b.inner.values()))):
        raise ArityError("inner automata differ in class or shape")
    cls = a.cls
    table = {}
    pair_name = {}
    for (n1, x1), (n2, x2) in itertools.product(a.inner.items(), b.inner.items()):
        if not (any(g == n1 for _, g, _ in a.outer.transitions)
                and any(g == n2 for _, g, _ in b.outer.transitions)):
            continue
        name = f"{n1}*{n2}"
        table[name] = cls.intersect(x1, x2)
        pair_name[(n1, n2)] = name
    sa = SymbolTable(sorted(a.inner))
    sb = SymbolTable(sorted(b.inner))
    oa = buchi.BuchiAutomaton(a.outer.states, a.outer.initial, a.outer.transitions,
                              a.outer.final, sa)
    ob = buchi.BuchiAutomaton(b.outer.states, b.outer.initial, b.outer.transitions,
                              b.outer.final, sb)
    prod = _pair_product(oa, ob, pair_name)
    if not table:
        table = {"none": cls.intersect(*[next(iter(t.inner.values())) for t in (a, b)])}
    return TemporalizedAutomaton(_with_names(prod, table), table)


def _pair_product(a, b, pair_name):
    """Büchi intersection where letters pair up names of the two automata."""

    def succ(node):
        p, q, phase = node
        if phase == 0 and p in a.final:
            nphase = 1
        elif phase == 1 and q in b.final:
            nphase = 0
        else:
            nphase = phase
        for g1, p2 in a.succ[p]:
            for g2, q2 in b.succ[q]:
                yield pair_name[(g1, g2)], (p2, q2, nphase)

    names = SymbolTable(sorted(set(pair_name.values())) or ["none"])
    out = buchi._renumber((a.initial, b.initial, 0), succ,
                          lambda n: n[2] == 0 and n[0] in a.final, names,
                          buchi.max_states())
    return buchi.trim(out)


def t_boolean(kind, a, b=None, **options):
    if kind == "union":
        return t_union(a, b)
    if kind in ("intersect", "intersection"):
        return t_intersect(a, b, **options)
    if kind == "complement":
        _require(a, "has_boolean", "has_emptiness")
        return t_complement(a, **options)
    raise ValueError(f"unknown Boolean operation {kind!r}")


def t_project(a: TemporalizedAutomaton, drop) -> TemporalizedAutomaton:
    _require(a, "has_projection")
    proj = a.cls.project
    return TemporalizedAutomaton(a.outer, {n: proj(x, drop) for n, x in a.inner.items()})


# ------------------------------------------------------------ emptiness


def t_empty_trace(a: TemporalizedAutomaton):
    """Run the three-step emptiness algorithm and report how it decided.

    Returns a dict with keys ``empty``, ``step`` (1 or 3), ``empty_labels``
    and ``witness`` (a LassoTreeSeq or None).
    """
    _require(a, "has_emptiness")
    if buchi.buchi_empty(a.outer)[0]:
        return {"empty": True, "step": 1, "empty_labels": [], "witness": None}
    witnesses = {}
    dead = []
    for name, x in a.inner.items():
        is_empty, w = a.cls.empty(x)
        if is_empty:
            dead.append(name)
        else:
            witnesses[name] = w
    kept = [t for t in a.outer.transitions if t[1] not in dead]
    pruned = buchi.BuchiAutomaton(a.outer.states, a.outer.initial, kept, a.outer.final,
                                  a.outer.alphabet)
    is_empty, lasso = buchi.buchi_empty(pruned)
    if is_empty:
        return {"empty": True, "step": 3, "empty_labels": dead, "witness": None}
    model = LassoTreeSeq([witnesses[n] for n in lasso.stem],
                         [witnesses[n] for n in lasso.loop])
    return {"empty": False, "step": 3, "empty_labels": dead, "witness": model,
            "labels": {"stem": list(lasso.stem), "loop": list(lasso.loop)}}


def t_empty(a: TemporalizedAutomaton):
    """Return (is_empty, witness LassoTreeSeq or None)."""
    trace = t_empty_trace(a)
    return trace["empty"], trace["witness"]


# ------------------------------------------------------- ITS emptiness


def _edge_labels(outer):
    labels = {}
    for q, g, r in outer.transitions:
        labels.setdefault((q, r), set()).add(g)
    return {e: sorted(v) for e, v in labels.items()}


def _lassos(outer, exhaustive):
    """Candidate lassos (states, loop_start) with states[-1] -> states[loop_start]."""
    edges = _edge_labels(outer)
    succ = {}
    for q, r in edges:
        succ.setdefault(q, set()).add(r)
    limit = 2 * outer.states if exhaustive else outer.states
    path = [outer.initial]

    def walk():
        u = path[-1]
        for j, v in enumerate(path):
            if v in succ.get(u, ()) and any(s in outer.final for s in path[j:]):
                yield tuple(path), j
        if len(path) >= limit:
            return
        for v in sorted(succ.get(u, ())):
            if not exhaustive and v in path:
                continue
            path.append(v)
            yield from walk()
            path.pop()

    yield from walk()


def its_empty(a: TemporalizedAutomaton, exhaustive=False):
    """Decide whether ``a`` accepts some increasing tree sequence.

    The i-th element of an increasing tree sequence is an almost k-ary tree
    of height i.  Candidate runs are lassos q0..qm with a loop back to qj;
    a stem position i needs a label accepting some tree of height i, and a
    loop position i needs labels whose heights contain every i + y*l, where
    l is the loop length.  Returns (is_empty, certificate or None).
    """
    _require(a, "has_height_set")
    if a.element is not AlmostKTree:
        raise CapabilityError("increasing tree sequences need almost-tree inner automata")
    heights = {n: a.cls.height_set(x) for n, x in a.inner.items()}
    edges = _edge_labels(a.outer)
    for states, j in _lassos(a.outer, exhaustive):
        m = len(states) - 1
        step = m - j + 1
        facts = []
        ok = True
        for i, q in enumerate(states):
            r = states[i + 1] if i < m else states[j]
            labels = edges[(q, r)]
            if i < j:
                good = [n for n in labels if eps_member(heights[n], i)]
                if not good:
                    ok = False
                    break
                facts.append({"position": i, "labels": good[:1], "kind": "height",
                              "height": i, "height_set": eps_to_json(heights[good[0]])})
            else:
                union = eps_union(*(heights[n] for n in labels))
                if not eps_contains_ap(union, i, step):
                    ok = False
                    break
                facts.append({"position": i, "labels": labels, "kind": "progression",
                              "start": i, "step": step, "height_set": eps_to_json(union)})
        if ok:
            return False, {"states": list(states), "loop_start": j, "loop_length": step,
                           "facts": facts}
    return True, None


def check_its_certificate(a: TemporalizedAutomaton, cert, simple=True) -> bool:
    """Re-check every fact of an ITS certificate against ``a``."""
    states, j = cert["states"], cert["loop_start"]
    m = len(states) - 1
    if not states or states[0] != a.outer.initial or not 0 <= j <= m:
        return False
    if simple and len(set(states)) != len(states):
        return False
    if not any(q in a.outer.final for q in states[j:]):
        return False
    if cert["loop_length"] != m - j + 1 or len(cert["facts"]) != m + 1:
        return False
    edges = _edge_labels(a.outer)
    for i, fact in enumerate(cert["facts"]):
        q = states[i]
        r = states[i + 1] if i < m else states[j]
        labels = fact["labels"]
        if fact["position"] != i or not labels or not set(labels) <= set(edges.get((q, r), ())):
            return False
        hs = [a.cls.height_set(a.inner[n]) for n in labels]
        if i < j:
            if fact["kind"] != "height" or not eps_member(hs[0], i):
                return False
        else:
            if fact["kind"] != "progression" or fact["start"] != i:
                return False
            if not eps_contains_ap(eps_union(*hs), i, cert["loop_length"]):
                return False
    return True


# -------------------------------------------------------- serialization


def t_to_json(a: TemporalizedAutomaton):
    to_json = a.cls.to_json
    return {"kind": "temporalized", "outer": buchi.buchi_to_json(a.outer),
            "inner": {n: to_json(x) for n, x in a.inner.items()}}


def t_from_json(data, where="$"):
    if isinstance(data, str):
        data = loads(data)
    if not isinstance(data, dict) or data.get("kind") != "temporalized":
        raise SchemaError("expected kind 'temporalized'", where)
    if not isinstance(data.get("inner"), dict) or not isinstance(data.get("outer"), dict):
        raise SchemaError("bundle needs 'outer' and 'inner' objects", where)
    inner = {n: inner_from_json(x, f"{where}.inner.{n}") for n, x in data["inner"].items()}
    outer = buchi.buchi_from_json(data["outer"], f"{where}.outer")
    if outer.alphabet.propositional:
        raise SchemaError("outer alphabet must list inner names", f"{where}.outer")
    return TemporalizedAutomaton(outer, inner)


def t_dumps(a):
    return dumps(t_to_json(a))


def t_to_dot(a: TemporalizedAutomaton, name="temporalized"):
    return buchi.buchi_to_dot(a.outer, name)
