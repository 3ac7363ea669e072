"""Bottom-up automata on complete and almost k-ary finite trees.

A run assigns a state to every node, from the leaves up.  Leaf transitions
``(q, guard)`` label leaves, internal transitions ``(q, guard, (q0..qk-1))``
label inner nodes, and in almost mode the root of a tree of positive height
uses root transitions with k-1 children.  A tree is accepted when its root
can carry an accepting state.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .core import (
    AlmostKTree, AlphabetMismatch, ArityError, CapabilityError, FiniteKTree,
    PropSet, ResourceLimit, SchemaError, SymbolTable, alphabet_from_json,
    check_letter, dumps, loads, max_states, require_same_alphabet,
)
from .periodic import EventuallyPeriodicSet, _canonical, reach_sequence

DETERMINIZE_CAP = 1 << 20
MODES = ("complete", "almost")


@dataclass(frozen=True)
class TreeAutomaton:
    k: int
    states: int
    leaf: tuple
    internal: tuple
    accepting: frozenset
    alphabet: PropSet | SymbolTable
    mode: str = "complete"
    root: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "leaf", tuple(self.leaf))
        object.__setattr__(self, "internal",
                           tuple((q, g, tuple(cs)) for q, g, cs in self.internal))
        object.__setattr__(self, "root", tuple((q, g, tuple(cs)) for q, g, cs in self.root))
        object.__setattr__(self, "accepting", frozenset(self.accepting))
        if self.k < 2:
            raise SchemaError("k must be at least 2")
        if self.mode not in MODES:
            raise SchemaError(f"mode must be one of {MODES}")
        if self.mode == "complete" and self.root:
            raise SchemaError("root transitions need almost mode")
        ok = range(self.states)
        for q, _ in self.leaf:
            if q not in ok:
                raise SchemaError(f"leaf transition state {q} out of range")
        for arity, table in ((self.k, self.internal), (self.k - 1, self.root)):
            for q, _, cs in table:
                if len(cs) != arity:
                    raise ArityError(f"transition into {q} has {len(cs)} children, expected {arity}")
                if q not in ok or any(c not in ok for c in cs):
                    raise SchemaError(f"transition into {q} mentions an unknown state")
        if any(q not in ok for q in self.accepting):
            raise SchemaError("accepting state out of range")

    @property
    def almost(self):
        return self.mode == "almost"

    def guards(self):
        return ([g for _, g in self.leaf] + [g for _, g, _ in self.internal]
                + [g for _, g, _ in self.root])

    def __repr__(self):
        return (f"TreeAutomaton(k={self.k}, mode={self.mode}, states={self.states}, "
                f"accepting={sorted(self.accepting)})")


def _all_guards(alphabet):
    if alphabet.propositional:
        return [alphabet.true_guard()]
    return list(alphabet.names)


def universal_fta(k, alphabet, mode="complete"):
    gs = _all_guards(alphabet)
    root = [(0, g, (0,) * (k - 1)) for g in gs] if mode == "almost" else []
    return TreeAutomaton(k, 1, [(0, g) for g in gs], [(0, g, (0,) * k) for g in gs], {0},
                         alphabet, mode, root)


def empty_fta(k, alphabet, mode="complete"):
    return TreeAutomaton(k, 1, (), (), (), alphabet, mode)


def fta_shape(k, h, alphabet, mode="complete"):
    """Automaton accepting exactly the trees of height ``h``."""
    if h < 0:
        raise ValueError("height must be non-negative")
    gs = _all_guards(alphabet)
    leaf = [(0, g) for g in gs]
    if mode == "almost" and h > 0:
        internal = [(i + 1, g, (i,) * k) for i in range(h - 1) for g in gs]
        root = [(h, g, (h - 1,) * (k - 1)) for g in gs]
    else:
        internal = [(i + 1, g, (i,) * k) for i in range(h) for g in gs]
        root = []
    return TreeAutomaton(k, h + 1, leaf, internal, {h}, alphabet, mode, root)


# ----------------------------------------------------------- membership


def _check_tree(a: TreeAutomaton, t):
    want = AlmostKTree if a.almost else FiniteKTree
    if not isinstance(t, want):
        raise ArityError(f"{a.mode} automaton expects a {want.__name__}")
    if t.k != a.k:
        raise ArityError(f"tree has k={t.k}, automaton has k={a.k}")


def run_states(a: TreeAutomaton, t):
    """Set of states the root of ``t`` can carry."""
    _check_tree(a, t)
    m = a.alphabet.matches
    memo = {}

    def states(node, table):
        key = (id(node), table is a.root)
        if key in memo:
            return memo[key]
        check_letter(a.alphabet, node.letter)
        if not node.children:
            out = frozenset(q for q, g in a.leaf if m(g, node.letter))
        else:
            kids = [states(c, a.internal) for c in node.children]
            out = frozenset(q for q, g, cs in table
                            if m(g, node.letter) and all(c in s for c, s in zip(cs, kids)))
        memo[key] = out
        return out

    return states(t, a.root if a.almost else a.internal)


def fta_member(a: TreeAutomaton, t) -> bool:
    return bool(run_states(a, t) & a.accepting)


# ------------------------------------------------- heights and emptiness


def _step(a, table, current):
    return frozenset(q for q, _, cs in table if all(c in current for c in cs))


def height_sequence(a: TreeAutomaton):
    """Sets S_h of states reachable at the root of height-h complete trees.

    Returns (sequence, preperiod, period) as ``reach_sequence`` does.
    """
    return reach_sequence(lambda s: _step(a, a.internal, s), {q for q, _ in a.leaf})


def _root_states(a, seq, pre, per, h):
    def at(t):
        return seq[t] if t < pre else seq[pre + (t - pre) % per]
    if not a.almost or h == 0:
        return at(h)
    return _step(a, a.root, at(h - 1))


def fta_height_set(a: TreeAutomaton) -> EventuallyPeriodicSet:
    """Exact set of heights h such that ``a`` accepts some tree of height h."""
    seq, pre, per = height_sequence(a)
    return _canonical(lambda h: bool(_root_states(a, seq, pre, per, h) & a.accepting),
                      pre + 1, per)


def fta_empty(a: TreeAutomaton):
    """Return (is_empty, witness of minimal height or None)."""
    seq, pre, per = height_sequence(a)
    w = a.alphabet.witness
    level, prev = {}, {}
    for q, g in a.leaf:
        level.setdefault(q, FiniteKTree(a.k, w(g)))
    for h in range(pre + per + 1):
        if a.almost and h > 0:
            for q, g, cs in a.root:
                if q in a.accepting and all(c in prev for c in cs):
                    return False, AlmostKTree(a.k, w(g), [prev[c] for c in cs])
        else:
            for q in sorted(level):
                if q in a.accepting:
                    t = level[q]
                    return False, (AlmostKTree(a.k, t.letter) if a.almost else t)
        prev = level
        level = {}
        for q, g, cs in a.internal:
            if q not in level and all(c in prev for c in cs):
                level[q] = FiniteKTree(a.k, w(g), [prev[c] for c in cs])
    return True, None


# --------------------------------------------------------- Boolean ops


def _check_pair(a, b):
    if a.k != b.k:
        raise ArityError(f"k differs: {a.k} vs {b.k}")
    if a.mode != b.mode:
        raise ArityError(f"root modes differ: {a.mode} vs {b.mode}")
    require_same_alphabet(a.alphabet, b.alphabet)
    if a.alphabet.propositional:
        return a.alphabet.union(b.alphabet)
    if a.alphabet != b.alphabet:
        raise AlphabetMismatch("symbol tables differ")
    return a.alphabet


def reachable_trim(a: TreeAutomaton) -> TreeAutomaton:
    """Drop states no tree can reach and renumber the rest."""
    live = {q for q, _ in a.leaf}
    changed = True
    while changed:
        changed = False
        for q, _, cs in a.internal:
            if q not in live and all(c in live for c in cs):
                live.add(q)
                changed = True
    top = set(live)
    for q, _, cs in a.root:
        if all(c in live for c in cs):
            top.add(q)
    index = {q: i for i, q in enumerate(sorted(top))}
    leaf = [(index[q], g) for q, g in a.leaf]
    internal = [(index[q], g, tuple(index[c] for c in cs)) for q, g, cs in a.internal
                if q in live and all(c in live for c in cs)]
    root = [(index[q], g, tuple(index[c] for c in cs)) for q, g, cs in a.root
            if all(c in live for c in cs)]
    return TreeAutomaton(a.k, len(index), leaf, internal,
                         {index[q] for q in a.accepting if q in index}, a.alphabet, a.mode, root)


def fta_union(a, b):
    alphabet = _check_pair(a, b)
    s = a.states

    def shift(table):
        return [(q + s, g, tuple(c + s for c in cs)) for q, g, cs in table]

    return TreeAutomaton(a.k, a.states + b.states,
                         list(a.leaf) + [(q + s, g) for q, g in b.leaf],
                         list(a.internal) + shift(b.internal),
                         set(a.accepting) | {q + s for q in b.accepting},
                         alphabet, a.mode, list(a.root) + shift(b.root))


def fta_intersect(a, b):
    """Product automaton restricted to pairs some tree can reach.

    Transitions of ``a`` are joined with those of ``b`` whose children are
    already known partners, so sparse automata never pay for all child tuples.
    """
    alphabet = _check_pair(a, b)
    conj = alphabet.conj
    index = {}
    pairs = []
    partners = {}

    def intern(p, q):
        if (p, q) not in index:
            index[(p, q)] = len(pairs)
            pairs.append((p, q))
            partners.setdefault(p, []).append(q)
        return index[(p, q)]

    def by_children(table):
        out = {}
        for q, g, cs in table:
            out.setdefault(cs, []).append((q, g))
        return out

    def join(table_a, table_b, seen, out):
        for p, g1, cs in table_a:
            pools = [partners.get(c) for c in cs]
            if not all(pools):
                continue
            for cs2 in itertools.product(*pools):
                for q, g2 in table_b.get(cs2, ()):
                    g = conj(g1, g2)
                    key = (p, q, g, cs, cs2)
                    if g is not None and key not in seen:
                        seen.add(key)
                        out.append(key)

    leaf = [(intern(p, q), g) for p, g1 in a.leaf for q, g2 in b.leaf
            if (g := conj(g1, g2)) is not None]
    ib = by_children(b.internal)
    seen, found = set(), []
    while True:
        size, before = len(pairs), len(found)
        join(a.internal, ib, seen, found)
        for p, q, *_ in found[before:]:
            intern(p, q)
        if len(pairs) == size:
            break
    internal = [(index[(p, q)], g, tuple(index[pq] for pq in zip(cs, cs2)))
                for p, q, g, cs, cs2 in found]
    root = []
    if a.almost:
        tops = []
        join(a.root, by_children(b.root), set(), tops)
        root = [(intern(p, q), g, tuple(index[pq] for pq in zip(cs, cs2)))
                for p, q, g, cs, cs2 in tops]
    acc = {i for i, (p, q) in enumerate(pairs) if p in a.accepting and q in b.accepting}
    return TreeAutomaton(a.k, max(len(pairs), 1), leaf, internal, acc, alphabet, a.mode, root)


def determinize(a: TreeAutomaton, cap=None):
    """Deterministic bottom-up automaton whose states are subsets of ``a``'s.

    Returns (subsets, automaton); state i of the result stands for
    ``subsets[i]``.  Every tree reaches exactly one state, so flipping the
    accepting set complements the language.
    """
    cap = cap or min(max_states(), DETERMINIZE_CAP)
    letters = list(a.alphabet.minterms(a.guards()))
    conj = a.alphabet.conj
    index = {}
    subsets = []

    def intern(s):
        if s not in index:
            if len(subsets) >= cap:
                raise ResourceLimit(f"tree determinization exceeds {cap} states")
            index[s] = len(subsets)
            subsets.append(s)
        return index[s]

    def indexer(table, arity):
        """Bit masks: transitions per (child position, state) and per letter."""
        by_child = [[0] * a.states for _ in range(arity)]
        by_letter = [0] * len(letters)
        for t, (_, g, cs) in enumerate(table):
            bit = 1 << t
            for d, c in enumerate(cs):
                by_child[d][c] |= bit
            for i, m in enumerate(letters):
                if conj(g, m) is not None:
                    by_letter[i] |= bit
        targets = [q for q, _, _ in table]
        masks = {}

        def image(combo):
            cand = -1
            for d, j in enumerate(combo):
                key = (d, j)
                if key not in masks:
                    mask = 0
                    for c in subsets[j]:
                        mask |= by_child[d][c]
                    masks[key] = mask
                cand &= masks[key]
            out = []
            for lm in by_letter:
                bits = cand & lm
                qs = set()
                while bits:
                    low = bits & -bits
                    qs.add(targets[low.bit_length() - 1])
                    bits ^= low
                out.append(frozenset(qs))
            return out

        return image

    leaf = []
    for m in letters:
        s = frozenset(q for q, g in a.leaf if conj(g, m) is not None)
        leaf.append((intern(s), m))
    image = indexer(a.internal, a.k)
    internal = []
    done = 0
    while done < len(subsets):
        i = done
        done += 1
        # every child tuple whose largest member is subset i
        for combo in itertools.product(range(i + 1), repeat=a.k):
            if i not in combo:
                continue
            for m, s in zip(letters, image(combo)):
                internal.append((intern(s), m, combo))
    body = len(subsets)
    root = []
    if a.almost:
        root_image = indexer(a.root, a.k - 1)
        for combo in itertools.product(range(body), repeat=a.k - 1):
            for m, s in zip(letters, root_image(combo)):
                root.append((intern(s), m, combo))
    acc = {i for i, s in enumerate(subsets) if s & a.accepting}
    return subsets, TreeAutomaton(a.k, len(subsets), leaf, internal, acc, a.alphabet,
                                  a.mode, root)


def fta_complement(a: TreeAutomaton, cap=None) -> TreeAutomaton:
    subsets, d = determinize(a, cap)
    acc = set(range(d.states)) - d.accepting
    return TreeAutomaton(d.k, d.states, d.leaf, d.internal, acc, d.alphabet, d.mode, d.root)


def fta_boolean(kind, a, b=None, **options):
    if kind == "union":
        return fta_union(a, b)
    if kind in ("intersect", "intersection"):
        return fta_intersect(a, b)
    if kind == "complement":
        return fta_complement(a, **options)
    raise ValueError(f"unknown Boolean operation {kind!r}")


def fta_project(a: TreeAutomaton, drop) -> TreeAutomaton:
    """Existential projection: forget the propositions in ``drop``."""
    if not a.alphabet.propositional:
        raise CapabilityError("projection needs a propositional alphabet")
    drop = frozenset(drop)
    pr = a.alphabet.project
    return TreeAutomaton(a.k, a.states, [(q, pr(g, drop)) for q, g in a.leaf],
                         [(q, pr(g, drop), cs) for q, g, cs in a.internal], a.accepting,
                         a.alphabet.without(drop), a.mode,
                         [(q, pr(g, drop), cs) for q, g, cs in a.root])


# ---------------------------------------------------------- serialization


def fta_to_json(a: TreeAutomaton):
    gj = a.alphabet.guard_to_json
    data = {"kind": "ftree", "k": a.k, "mode": a.mode, "states": a.states,
            "accepting": sorted(a.accepting),
            "leaf": [[q, gj(g)] for q, g in a.leaf],
            "internal": [[q, gj(g), list(cs)] for q, g, cs in a.internal]}
    if a.almost:
        data["root"] = [[q, gj(g), list(cs)] for q, g, cs in a.root]
    data.update(a.alphabet.to_json())
    return data


def fta_from_json(data, where="$"):
    if isinstance(data, str):
        data = loads(data)
    if not isinstance(data, dict) or data.get("kind") != "ftree":
        raise SchemaError("expected kind 'ftree'", where)
    alphabet = alphabet_from_json(data, where)

    def table(key, with_children):
        out = []
        for i, t in enumerate(data.get(key, [])):
            at = f"{where}.{key}[{i}]"
            size = 3 if with_children else 2
            if not isinstance(t, list) or len(t) != size:
                raise SchemaError(f"{key} transition must have {size} entries", at)
            g = alphabet.guard_from_json(t[1], at)
            if with_children:
                if not isinstance(t[2], list):
                    raise SchemaError("children must be a list of states", at)
                out.append((int(t[0]), g, tuple(int(c) for c in t[2])))
            else:
                out.append((int(t[0]), g))
        return out

    try:
        return TreeAutomaton(int(data["k"]), int(data["states"]), table("leaf", False),
                             table("internal", True), data.get("accepting", []), alphabet,
                             data.get("mode", "complete"), table("root", True))
    except (KeyError, TypeError, ValueError) as e:
        raise SchemaError(f"malformed tree automaton: {e}", where) from None


def fta_dumps(a):
    return dumps(fta_to_json(a))


def fta_to_dot(a: TreeAutomaton, name="ftree"):
    """Transition hypergraph: every transition is a point node."""
    esc = lambda s: str(s).replace("\\", "\\\\").replace('"', '\\"')
    lines = [f"digraph {name} {{", "  rankdir=BT;"]
    for q in range(a.states):
        shape = "doublecircle" if q in a.accepting else "circle"
        lines.append(f'  q{q} [shape={shape}, label="{q}"];')
    n = 0
    for kind, table in (("leaf", [(q, g, ()) for q, g in a.leaf]),
                        ("node", a.internal), ("root", a.root)):
        for q, g, cs in table:
            t = f"t{n}"
            n += 1
            lines.append(f'  {t} [shape=point, xlabel="{esc(g)}"];')
            for i, c in enumerate(cs):
                pos = i + 1 if kind == "root" else i
                lines.append(f'  q{c} -> {t} [arrowhead=none, label="{pos}"];')
            lines.append(f'  {t} -> q{q} [label="{kind}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
