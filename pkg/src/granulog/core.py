"""Shared model types, alphabets and canonical JSON serialization.

Two kinds of alphabet are supported:

* ``PropSet``: letters are subsets of an ordered set of proposition names.
  Automata over a ``PropSet`` label transitions with ``Cube`` guards
  (conjunctions of literals), so a guard stands for many letters at once.
* ``SymbolTable``: letters are opaque symbols (strings); a guard is a symbol.

Models (trees, lasso words, lasso tree sequences, regular trees) are
immutable and hashable.
"""

from __future__ import annotations

import itertools
import json
import os
from dataclasses import dataclass, field
from typing import Iterable, Iterator


class GranulogError(Exception):
    """Base class of all library errors."""


class SchemaError(GranulogError):
    """Input text does not conform to a JSON schema."""

    def __init__(self, message, where="$"):
        super().__init__(f"{where}: {message}")
        self.where = where


class ArityError(SchemaError):
    """A tree node has the wrong number of children."""


class AlphabetMismatch(GranulogError):
    """Objects over incompatible alphabets were combined."""


class CapabilityError(GranulogError):
    """An operation is not supported by the automaton class involved."""


class FragmentError(GranulogError):
    """A formula lies outside the supported logical fragment."""


class ResourceLimit(GranulogError):
    """A construction would exceed the configured state cap."""


# ---------------------------------------------------------------- limits

_DEFAULT_CAP = 10**6
_cap_override = None


def max_states(default=_DEFAULT_CAP):
    """State cap for expensive constructions.

    An explicit override (see ``set_max_states``) wins over the
    ``GRANULOG_MAX_STATES`` environment variable, which wins over
    ``default``.
    """
    if _cap_override is not None:
        return _cap_override
    env = os.environ.get("GRANULOG_MAX_STATES")
    if env:
        try:
            return int(env)
        except ValueError:
            raise GranulogError(f"GRANULOG_MAX_STATES is not an integer: {env!r}")
    return default


def set_max_states(value):
    global _cap_override
    _cap_override = value


# ------------------------------------------------------------- alphabets


@dataclass(frozen=True, order=True)
class Cube:
    """Conjunction of literals: props in ``pos`` true, props in ``neg`` false."""

    pos: frozenset = frozenset()
    neg: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "pos", frozenset(self.pos))
        object.__setattr__(self, "neg", frozenset(self.neg))

    def consistent(self):
        return not (self.pos & self.neg)

    def props(self):
        return self.pos | self.neg

    def __str__(self):
        lits = [p for p in sorted(self.pos)] + ["!" + p for p in sorted(self.neg)]
        return " & ".join(lits) if lits else "true"


TRUE = Cube()


class PropSet:
    """Ordered finite set of proposition names; letters are subsets."""

    propositional = True

    def __init__(self, names: Iterable[str] = ()):
        names = tuple(names)
        if len(set(names)) != len(names):
            raise SchemaError("duplicate proposition names")
        self.names = names

    def __eq__(self, other):
        return isinstance(other, PropSet) and set(self.names) == set(other.names)

    def __hash__(self):
        return hash(frozenset(self.names))

    def __repr__(self):
        return f"PropSet({list(self.names)!r})"

    def union(self, other):
        extra = [n for n in other.names if n not in self.names]
        return PropSet(self.names + tuple(extra))

    def without(self, drop):
        return PropSet(n for n in self.names if n not in drop)

    def letters(self):
        for bits in itertools.product((False, True), repeat=len(self.names)):
            yield frozenset(n for n, b in zip(self.names, bits) if b)

    def encode(self, letter):
        """Letter as a bit vector in the fixed proposition order."""
        return tuple(int(n in letter) for n in self.names)

    def is_letter(self, letter):
        return isinstance(letter, frozenset)

    def matches(self, guard: Cube, letter):
        return guard.pos <= letter and not (guard.neg & letter)

    def conj(self, g1: Cube, g2: Cube):
        c = Cube(g1.pos | g2.pos, g1.neg | g2.neg)
        return c if c.consistent() else None

    def true_guard(self):
        return TRUE

    def letter_guard(self, letter):
        return Cube(frozenset(letter), frozenset(self.names) - frozenset(letter))

    def witness(self, guard: Cube):
        return frozenset(guard.pos)

    def project(self, guard: Cube, drop):
        drop = frozenset(drop)
        return Cube(guard.pos - drop, guard.neg - drop)

    def minterms(self, guards):
        """Full cubes over the propositions mentioned by ``guards``."""
        used = sorted(set().union(*(g.props() for g in guards)) if guards else set())
        for bits in itertools.product((False, True), repeat=len(used)):
            pos = frozenset(p for p, b in zip(used, bits) if b)
            yield Cube(pos, frozenset(used) - pos)

    def guard_to_json(self, guard: Cube):
        return sorted(guard.pos) + ["!" + p for p in sorted(guard.neg)]

    def guard_from_json(self, data, where="$"):
        if not isinstance(data, list):
            raise SchemaError("guard must be a list of literals", where)
        pos, neg = set(), set()
        for lit in data:
            if not isinstance(lit, str) or not lit.lstrip("!"):
                raise SchemaError(f"bad literal {lit!r}", where)
            name = lit.lstrip("!")
            if name not in self.names:
                raise SchemaError(f"unknown proposition {name!r}", where)
            (neg if lit.startswith("!") else pos).add(name)
        cube = Cube(pos, neg)
        if not cube.consistent():
            raise SchemaError("contradictory guard", where)
        return cube

    def to_json(self):
        return {"propositional": True, "alphabet": list(self.names)}


class SymbolTable:
    """Enumerated raw alphabet; guards are the symbols themselves."""

    propositional = False

    def __init__(self, symbols: Iterable[str]):
        symbols = tuple(symbols)
        if len(set(symbols)) != len(symbols):
            raise SchemaError("duplicate symbols")
        self.names = symbols

    def __eq__(self, other):
        return isinstance(other, SymbolTable) and set(self.names) == set(other.names)

    def __hash__(self):
        return hash(("sym", frozenset(self.names)))

    def __repr__(self):
        return f"SymbolTable({list(self.names)!r})"

    def union(self, other):
        extra = [n for n in other.names if n not in self.names]
        return SymbolTable(self.names + tuple(extra))

    def letters(self):
        return iter(self.names)

    def is_letter(self, letter):
        return letter in self.names

    def matches(self, guard, letter):
        return guard == letter

    def conj(self, g1, g2):
        return g1 if g1 == g2 else None

    def letter_guard(self, letter):
        return letter

    def witness(self, guard):
        return guard

    def project(self, guard, drop):
        raise CapabilityError("projection needs a propositional alphabet")

    def minterms(self, guards):
        return iter(self.names)

    def guard_to_json(self, guard):
        return guard

    def guard_from_json(self, data, where="$"):
        if data not in self.names:
            raise SchemaError(f"unknown symbol {data!r}", where)
        return data

    def to_json(self):
        return {"alphabet": list(self.names)}


def alphabet_from_json(data, where="$"):
    names = data.get("alphabet")
    if not isinstance(names, list) or not all(isinstance(n, str) for n in names):
        raise SchemaError("'alphabet' must be a list of names", where)
    if data.get("propositional", False):
        return PropSet(names)
    return SymbolTable(names)


def require_same_alphabet(a, b):
    if type(a) is not type(b) or (not a.propositional and a != b):
        raise AlphabetMismatch(f"{a!r} vs {b!r}")


def check_letter(alphabet, letter):
    """Raise unless ``letter`` is a letter of ``alphabet``.

    Propositional letters may mention propositions the alphabet does not
    know; those are simply irrelevant to the automaton.
    """
    if not alphabet.is_letter(letter):
        raise AlphabetMismatch(f"letter {letter!r} does not belong to {alphabet!r}")


# ---------------------------------------------------------------- models


def _letter_key(letter):
    if isinstance(letter, frozenset):
        return (1, tuple(sorted(letter)))
    return (0, letter)


@dataclass(frozen=True)
class FiniteKTree:
    """Complete k-ary finite tree; children are indexed 0..k-1."""

    k: int
    letter: object
    children: tuple = ()
    height: int = field(default=0, init=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if self.k < 2:
            raise SchemaError("k must be at least 2")
        if self.children:
            if len(self.children) != self.k:
                raise ArityError(f"node has {len(self.children)} children, expected {self.k}")
            hs = {c.height for c in self.children}
            if len(hs) != 1 or any(c.k != self.k for c in self.children):
                raise SchemaError("subtrees must share k and height")
            object.__setattr__(self, "height", hs.pop() + 1)

    def nodes(self, path=()):
        """Yield (path, node) pairs in preorder; a path lists child indices."""
        yield path, self
        for i, c in enumerate(self.children):
            yield from c.nodes(path + (i,))

    def child_indices(self):
        return range(len(self.children))


@dataclass(frozen=True)
class AlmostKTree:
    """Finite tree whose root has k-1 complete subtrees (indexed 1..k-1)."""

    k: int
    letter: object
    children: tuple = ()
    height: int = field(default=0, init=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if self.k < 2:
            raise SchemaError("k must be at least 2")
        if self.children:
            if len(self.children) != self.k - 1:
                raise ArityError(
                    f"almost-tree root has {len(self.children)} children, expected {self.k - 1}")
            hs = {c.height for c in self.children}
            if len(hs) != 1 or any(c.k != self.k for c in self.children):
                raise SchemaError("subtrees must share k and height")
            object.__setattr__(self, "height", hs.pop() + 1)

    def nodes(self, path=()):
        yield path, self
        for i, c in zip(self.child_indices(), self.children):
            yield from c.nodes(path + (i,))

    def child_indices(self):
        return range(1, len(self.children) + 1)


def height(t):
    """Depth of the leaves of a finite (almost) k-ary tree."""
    return t.height


def child(node, direction):
    """The child reached by ``direction`` or None."""
    idx = list(node.child_indices())
    if direction in idx:
        return node.children[idx.index(direction)]
    return None


@dataclass(frozen=True)
class LassoWord:
    """The infinite word stem . loop^omega."""

    stem: tuple
    loop: tuple

    def __post_init__(self):
        object.__setattr__(self, "stem", tuple(self.stem))
        object.__setattr__(self, "loop", tuple(self.loop))
        if not self.loop:
            raise SchemaError("loop must be nonempty")

    def __getitem__(self, i):
        if i < len(self.stem):
            return self.stem[i]
        return self.loop[(i - len(self.stem)) % len(self.loop)]

    def __len__(self):
        return len(self.stem) + len(self.loop)

    def successor(self, i):
        """Position following i in the folded lasso."""
        return i + 1 if i + 1 < len(self) else len(self.stem)

    def letters(self):
        return self.stem + self.loop


@dataclass(frozen=True)
class LassoTreeSeq(LassoWord):
    """Ultimately periodic sequence of inner objects.

    Elements are finite trees, almost trees, lasso words or regular
    infinite trees, all of one kind.
    """

    def __post_init__(self):
        super().__post_init__()
        kinds = {type(x) for x in self.stem + self.loop}
        if len(kinds) != 1:
            raise SchemaError("elements of a tree sequence must share a kind")
        kind = kinds.pop()
        if kind not in (FiniteKTree, AlmostKTree, LassoWord, RegularTree):
            raise SchemaError(f"unsupported element type {kind.__name__}")
        if kind is not LassoWord and len({x.k for x in self.stem + self.loop}) != 1:
            raise SchemaError("trees of a sequence must share k")

    @property
    def element_kind(self):
        return type(self.loop[0])


@dataclass(frozen=True)
class RegularTree:
    """Infinite k-ary tree given as the unfolding of a finite generator."""

    k: int
    labels: tuple
    succ: tuple
    start: int = 0

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "succ", tuple(tuple(s) for s in self.succ))
        n = len(self.labels)
        if len(self.succ) != n or not 0 <= self.start < n:
            raise SchemaError("generator size mismatch")
        for v, s in enumerate(self.succ):
            if len(s) != self.k:
                raise ArityError(f"generator vertex {v} has {len(s)} successors, expected {self.k}")
            if any(not 0 <= w < n for w in s):
                raise SchemaError(f"generator vertex {v} has a dangling successor")

    def vertex_at(self, path):
        v = self.start
        for d in path:
            v = self.succ[v][d]
        return v


# ----------------------------------------------------------------- JSON


def letter_to_json(letter):
    if isinstance(letter, frozenset):
        return sorted(letter)
    return letter


def letter_from_json(data, where="$"):
    if isinstance(data, str):
        return data
    if isinstance(data, list) and all(isinstance(x, str) for x in data):
        if len(set(data)) != len(data):
            raise SchemaError("duplicate proposition in letter", where)
        return frozenset(data)
    raise SchemaError("letter must be a symbol or a list of propositions", where)


def _node_to_json(node):
    return {"letter": letter_to_json(node.letter),
            "children": [_node_to_json(c) for c in node.children]}


def model_to_json(m):
    if isinstance(m, FiniteKTree):
        return {"kind": "tree", "k": m.k, "root": _node_to_json(m)}
    if isinstance(m, AlmostKTree):
        return {"kind": "almost-tree", "k": m.k, "root": _node_to_json(m)}
    if isinstance(m, LassoTreeSeq):
        return {"kind": "lasso-treeseq",
                "stem": [model_to_json(x) for x in m.stem],
                "loop": [model_to_json(x) for x in m.loop]}
    if isinstance(m, LassoWord):
        return {"kind": "lasso-word",
                "stem": [letter_to_json(a) for a in m.stem],
                "loop": [letter_to_json(a) for a in m.loop]}
    if isinstance(m, RegularTree):
        return {"kind": "regular-tree", "k": m.k, "start": m.start,
                "vertices": [{"letter": letter_to_json(a), "succ": list(s)}
                             for a, s in zip(m.labels, m.succ)]}
    raise TypeError(f"not a model: {m!r}")


def _get(data, key, where, types):
    if not isinstance(data, dict):
        raise SchemaError("expected an object", where)
    if key not in data:
        raise SchemaError(f"missing field {key!r}", where)
    value = data[key]
    if not isinstance(value, types) or isinstance(value, bool):
        raise SchemaError(f"field {key!r} has the wrong type", f"{where}.{key}")
    return value


def _tree_from_json(data, k, where):
    letter = letter_from_json(_get(data, "letter", where, (str, list)), f"{where}.letter")
    kids = data.get("children", [])
    if not isinstance(kids, list):
        raise SchemaError("children must be a list", f"{where}.children")
    if kids and len(kids) != k:
        raise ArityError(f"node has {len(kids)} children, expected {k}", where)
    children = [_tree_from_json(c, k, f"{where}.children[{i}]") for i, c in enumerate(kids)]
    try:
        return FiniteKTree(k, letter, children)
    except ArityError:
        raise
    except SchemaError as e:
        raise SchemaError(str(e), where) from None


def _check_alphabet(data, m, where):
    """Validate letters against an optional "alphabet" field."""
    names = data.get("alphabet")
    if names is None:
        return
    if not isinstance(names, list):
        raise SchemaError("'alphabet' must be a list", f"{where}.alphabet")
    allowed = set(names)
    for letter in _model_letters(m):
        bad = (letter - allowed) if isinstance(letter, frozenset) else (
            {letter} - allowed)
        if bad:
            raise SchemaError(f"letter uses unknown names {sorted(bad)}", where)


def _model_letters(m):
    if isinstance(m, (FiniteKTree, AlmostKTree)):
        for _, node in m.nodes():
            yield node.letter
    elif isinstance(m, LassoTreeSeq):
        for x in m.stem + m.loop:
            yield from _model_letters(x)
    elif isinstance(m, LassoWord):
        yield from m.stem + m.loop
    elif isinstance(m, RegularTree):
        yield from m.labels


def model_from_json(data, where="$"):
    kind = _get(data, "kind", where, str)
    if kind in ("tree", "almost-tree"):
        k = _get(data, "k", where, int)
        if k < 2:
            raise SchemaError("k must be at least 2", f"{where}.k")
        root = _get(data, "root", where, dict)
        if kind == "tree":
            m = _tree_from_json(root, k, f"{where}.root")
        else:
            kids = root.get("children", [])
            if not isinstance(kids, list):
                raise SchemaError("children must be a list", f"{where}.root.children")
            if kids and len(kids) != k - 1:
                raise ArityError(
                    f"almost-tree root has {len(kids)} children, expected {k - 1}",
                    f"{where}.root")
            children = [_tree_from_json(c, k, f"{where}.root.children[{i}]")
                        for i, c in enumerate(kids)]
            letter = letter_from_json(_get(root, "letter", f"{where}.root", (str, list)))
            try:
                m = AlmostKTree(k, letter, children)
            except SchemaError as e:
                raise SchemaError(str(e), f"{where}.root") from None
    elif kind in ("lasso-word", "lasso-treeseq"):
        stem = _get(data, "stem", where, list)
        loop = _get(data, "loop", where, list)
        if not loop:
            raise SchemaError("loop must be nonempty", f"{where}.loop")
        if kind == "lasso-word":
            conv = letter_from_json
        else:
            conv = model_from_json
        stem = [conv(x, f"{where}.stem[{i}]") for i, x in enumerate(stem)]
        loop = [conv(x, f"{where}.loop[{i}]") for i, x in enumerate(loop)]
        cls = LassoWord if kind == "lasso-word" else LassoTreeSeq
        try:
            m = cls(stem, loop)
        except SchemaError as e:
            raise SchemaError(str(e), where) from None
    elif kind == "regular-tree":
        k = _get(data, "k", where, int)
        verts = _get(data, "vertices", where, list)
        labels, succ = [], []
        for i, v in enumerate(verts):
            w = f"{where}.vertices[{i}]"
            labels.append(letter_from_json(_get(v, "letter", w, (str, list)), w))
            succ.append(_get(v, "succ", w, list))
        try:
            m = RegularTree(k, labels, succ, data.get("start", 0))
        except SchemaError as e:
            raise type(e)(str(e), where) from None
    else:
        raise SchemaError(f"unknown model kind {kind!r}", f"{where}.kind")
    _check_alphabet(data, m, where)
    return m


def dumps(obj):
    """Canonical JSON text: sorted keys, compact separators, UTF-8."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def loads(text, where="$"):
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"invalid JSON: {e.msg} (line {e.lineno}, column {e.colno})",
                          where) from None


def parse_model(text):
    """Parse and validate a model from JSON text."""
    return model_from_json(loads(text))


def serialize_model(m):
    return dumps(model_to_json(m))


# -------------------------------------------------------------- helpers


def complete_tree(k, h, letter):
    """The complete k-ary tree of height h with every node labeled ``letter``."""
    t = FiniteKTree(k, letter)
    for _ in range(h):
        t = FiniteKTree(k, letter, [t] * k)
    return t


def almost_tree(k, h, letter):
    if h == 0:
        return AlmostKTree(k, letter)
    sub = complete_tree(k, h - 1, letter)
    return AlmostKTree(k, letter, [sub] * (k - 1))


def all_trees(k, h, letters, almost=False) -> Iterator:
    """Every (almost) k-ary tree of height exactly h over ``letters``."""
    letters = list(letters)
    if almost:
        if h == 0:
            for a in letters:
                yield AlmostKTree(k, a)
            return
        subs = list(all_trees(k, h - 1, letters))
        for a in letters:
            for kids in itertools.product(subs, repeat=k - 1):
                yield AlmostKTree(k, a, kids)
        return
    if h == 0:
        for a in letters:
            yield FiniteKTree(k, a)
        return
    subs = list(all_trees(k, h - 1, letters))
    for a in letters:
        for kids in itertools.product(subs, repeat=k):
            yield FiniteKTree(k, a, kids)


def all_lassos(letters, max_stem, max_loop, min_loop=1):
    """Every lasso word with |stem| <= max_stem and min_loop <= |loop| <= max_loop."""
    letters = list(letters)
    for s in range(max_stem + 1):
        for stem in itertools.product(letters, repeat=s):
            for n in range(min_loop, max_loop + 1):
                for loop in itertools.product(letters, repeat=n):
                    yield LassoWord(stem, loop)
