"""Büchi automata on infinite words.

States are the integers ``0..states-1``.  A transition is a triple
``(source, guard, target)`` where the guard is a ``Cube`` over a
``PropSet`` or a symbol of a ``SymbolTable``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

from . import _graph
from .core import (
    AlphabetMismatch, CapabilityError, LassoWord, PropSet, ResourceLimit,
    SchemaError, SymbolTable, alphabet_from_json, check_letter, dumps, loads,
    max_states, require_same_alphabet,
)


@dataclass(frozen=True)
class BuchiAutomaton:
    states: int
    initial: int
    transitions: tuple
    final: frozenset
    alphabet: PropSet | SymbolTable

    def __post_init__(self):
        object.__setattr__(self, "transitions", tuple(self.transitions))
        object.__setattr__(self, "final", frozenset(self.final))
        if not 0 <= self.initial < self.states:
            raise SchemaError("initial state out of range")
        for q, _, r in self.transitions:
            if not (0 <= q < self.states and 0 <= r < self.states):
                raise SchemaError(f"transition ({q}, {r}) out of range")
        if any(not 0 <= f < self.states for f in self.final):
            raise SchemaError("final state out of range")

    @cached_property
    def succ(self):
        out = [[] for _ in range(self.states)]
        for q, g, r in self.transitions:
            out[q].append((g, r))
        return out

    def post(self, qs, letter):
        """States reachable from ``qs`` reading the concrete ``letter``."""
        m = self.alphabet.matches
        return frozenset(r for q in qs for g, r in self.succ[q] if m(g, letter))

    def guards(self):
        return [g for _, g, _ in self.transitions]

    def __repr__(self):
        return (f"BuchiAutomaton(states={self.states}, initial={self.initial}, "
                f"final={sorted(self.final)}, transitions={len(self.transitions)})")


def universal(alphabet):
    if alphabet.propositional:
        trans = [(0, alphabet.true_guard(), 0)]
    else:
        trans = [(0, a, 0) for a in alphabet.names]
    return BuchiAutomaton(1, 0, trans, {0}, alphabet)


def empty_automaton(alphabet):
    return BuchiAutomaton(1, 0, (), (), alphabet)


def from_initial_set(states, initials, transitions, final, alphabet):
    """Normalize an automaton with several initial states by adding a fresh one."""
    initials = sorted(set(initials))
    if len(initials) == 1:
        return BuchiAutomaton(states, initials[0], transitions, final, alphabet)
    fresh = states
    extra = [(fresh, g, r) for q, g, r in transitions if q in initials]
    return BuchiAutomaton(states + 1, fresh, tuple(transitions) + tuple(extra), final,
                          alphabet)


# ------------------------------------------------------------ emptiness


def buchi_empty(a: BuchiAutomaton):
    """Return (is_empty, witness lasso or None)."""
    found = _graph.accepting_lasso([a.initial], lambda q: a.succ[q], lambda q: q in a.final)
    if found is None:
        return True, None
    stem, loop, _, _ = found
    w = a.alphabet.witness
    return False, LassoWord([w(g) for g in stem], [w(g) for g in loop])


def accepting_run(a: BuchiAutomaton, word: LassoWord, enabled=None):
    """Search the product of ``a`` with the positions of ``word``.

    ``enabled(guard, letter)`` decides whether a transition may read a
    letter; it defaults to the alphabet's guard semantics.  Returns
    (stem_nodes, loop_nodes) over (state, position) pairs or None.
    """
    enabled = enabled or a.alphabet.matches

    def succ(node):
        q, i = node
        letter = word[i]
        nxt = word.successor(i)
        for g, r in a.succ[q]:
            if enabled(g, letter):
                yield g, (r, nxt)

    found = _graph.accepting_lasso([(a.initial, 0)], succ, lambda n: n[0] in a.final)
    if found is None:
        return None
    _, _, stem_nodes, loop_nodes = found
    return stem_nodes, loop_nodes


def buchi_member(a: BuchiAutomaton, word: LassoWord) -> bool:
    for letter in word.letters():
        check_letter(a.alphabet, letter)
    return accepting_run(a, word) is not None


# ------------------------------------------------------- trim and reduce


def trim(a: BuchiAutomaton) -> BuchiAutomaton:
    """Drop states that are unreachable or cannot reach an accepting cycle."""
    order, edges, _ = _graph.explore([a.initial], lambda q: a.succ[q])
    good = _graph.useful_nodes(order, edges, lambda q: q in a.final)
    if not good:
        return empty_automaton(a.alphabet)
    keep = [q for q in order if q in good]
    index = {q: i for i, q in enumerate(keep)}
    trans = [(index[q], g, index[r]) for q, g, r in a.transitions if q in index and r in index]
    return BuchiAutomaton(len(keep), index[a.initial], trans,
                          {index[q] for q in a.final if q in index}, a.alphabet)


def _renumber(initial, succ, is_final, alphabet, cap):
    """Materialize an implicit automaton reachable from ``initial``."""
    index = {initial: 0}
    order = [initial]
    trans = []
    i = 0
    while i < len(order):
        node = order[i]
        i += 1
        for g, nxt in succ(node):
            if nxt not in index:
                if len(order) >= cap:
                    raise ResourceLimit(f"construction exceeds {cap} states")
                index[nxt] = len(order)
                order.append(nxt)
            trans.append((index[node], g, index[nxt]))
    final = {index[n] for n in order if is_final(n)}
    return BuchiAutomaton(len(order), 0, trans, final, alphabet)


# --------------------------------------------------------- Boolean ops


def _check_pair(a, b):
    require_same_alphabet(a.alphabet, b.alphabet)
    if a.alphabet.propositional:
        return a.alphabet.union(b.alphabet)
    if a.alphabet != b.alphabet:
        raise AlphabetMismatch("symbol tables differ")
    return a.alphabet


def buchi_union(a, b):
    alphabet = _check_pair(a, b)
    shift = a.states
    trans = list(a.transitions) + [(q + shift, g, r + shift) for q, g, r in b.transitions]
    final = set(a.final) | {q + shift for q in b.final}
    return from_initial_set(a.states + b.states, [a.initial, b.initial + shift], trans,
                            final, alphabet)


def buchi_intersect(a, b):
    alphabet = _check_pair(a, b)
    conj = alphabet.conj

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
                g = conj(g1, g2)
                if g is not None:
                    yield g, (p2, q2, nphase)

    out = _renumber((a.initial, b.initial, 0), succ,
                    lambda n: n[2] == 0 and n[0] in a.final, alphabet, max_states())
    return trim(out)


def _letters(a):
    """Representative letters: minterms of the guards or all symbols."""
    return list(a.alphabet.minterms(a.guards()))


def _post_minterm(a, qs, m):
    conj = a.alphabet.conj
    return frozenset(r for q in qs for g, r in a.succ[q] if conj(g, m) is not None)


def safra_step(a, tree, m, n):
    """One step of Safra's construction with compact node names.

    ``tree`` is a tuple of (parent_name, label) indexed by name-1.  Returns
    (new_tree, priority) with min-even parity: the priority is 2f when the
    smallest marked name f precedes every removed name, 2e-1 when a node
    named e is removed first, and 2n+1 when nothing happens.
    """
    nodes = {i + 1: [p, set(lbl)] for i, (p, lbl) in enumerate(tree)}
    nxt = len(nodes) + 1
    for name in sorted(nodes):
        acc = nodes[name][1] & a.final
        if acc:
            nodes[nxt] = [name, set(acc)]
            nxt += 1
    for v in nodes.values():
        v[1] = set(_post_minterm(a, v[1], m))
    children = {name: [] for name in nodes}
    for name in sorted(nodes):
        p = nodes[name][0]
        if p:
            children[p].append(name)

    def restrict(name):
        seen = set()
        for c in children[name]:
            nodes[c][1] &= nodes[name][1]
            nodes[c][1] -= seen
            seen |= nodes[c][1]
            restrict(c)

    if 1 in nodes:
        restrict(1)
    removed = set()
    marked = set()

    def drop(name):
        removed.add(name)
        for c in children[name]:
            drop(c)

    for name in sorted(nodes):
        if name not in removed and not nodes[name][1]:
            drop(name)
    for name in sorted(nodes):
        if name in removed:
            continue
        kids = [c for c in children[name] if c not in removed]
        if kids and set().union(*(nodes[c][1] for c in kids)) == nodes[name][1]:
            for c in kids:
                drop(c)
            marked.add(name)
    survivors = [name for name in sorted(nodes) if name not in removed]
    rename = {old: i + 1 for i, old in enumerate(survivors)}
    new = tuple((rename.get(nodes[o][0], 0), frozenset(nodes[o][1])) for o in survivors)
    old_names = [x for x in removed if x <= len(tree)]
    e = min(old_names, default=None)
    f = min(marked, default=None)
    if f is not None and (e is None or f < e):
        return new, 2 * f
    if e is not None:
        return new, 2 * e - 1
    return new, 2 * n + 1


def determinize(a: BuchiAutomaton, cap=None):
    """Deterministic parity automaton equivalent to ``a``.

    Returns (initial, table, letters) where ``table[tree][i] = (tree', pri)``
    for the i-th representative letter.
    """
    cap = cap or max_states()
    letters = _letters(a)
    n = max(a.states, 1)
    start = ((0, frozenset({a.initial})),)
    table = {}
    todo = [start]
    while todo:
        t = todo.pop()
        if t in table:
            continue
        if len(table) >= cap:
            raise ResourceLimit(f"determinization exceeds {cap} states")
        row = [safra_step(a, t, m, n) for m in letters]
        table[t] = row
        todo.extend(t2 for t2, _ in row if t2 not in table)
    return start, table, letters


def _parity_to_buchi(start, table, letters, accept_parity, alphabet, cap):
    """Büchi automaton for runs whose least recurring priority has the given parity."""
    priorities = sorted({p for row in table.values() for _, p in row})
    targets = [p for p in priorities if p % 2 == accept_parity]

    def succ(node):
        t = node[1]
        row = table[t]
        for m, (t2, pri) in zip(letters, row):
            if node[0] == "wait":
                yield m, ("wait", t2)
                for e in targets:
                    if pri >= e:
                        yield m, ("track", t2, e, pri == e)
            else:
                e = node[2]
                if pri >= e:
                    yield m, ("track", t2, e, pri == e)

    out = _renumber(("wait", start), succ, lambda nd: nd[0] == "track" and nd[3],
                    alphabet, cap)
    return trim(out)


def complement_rank(a: BuchiAutomaton, cap=None) -> BuchiAutomaton:
    """Rank-based complement (level rankings with a breakpoint set).

    Ranks are bounded by twice the widest reachable subset of states, and
    each successor rank is the largest value of its parity allowed by the
    predecessors; both restrictions keep the construction complete.
    """
    cap = cap or max_states()
    letters = _letters(a)
    subsets = {frozenset({a.initial})}
    todo = [frozenset({a.initial})]
    while todo:
        s = todo.pop()
        for m in letters:
            s2 = _post_minterm(a, s, m)
            if s2 not in subsets:
                subsets.add(s2)
                todo.append(s2)
    top = 2 * max(len(s) for s in subsets)
    final = a.final

    def succ(node):
        ranking, owing = node
        for m in letters:
            bound = {}
            for q, r in ranking:
                for g, q2 in a.succ[q]:
                    if a.alphabet.conj(g, m) is not None:
                        bound[q2] = min(bound.get(q2, r), r)
            targets = sorted(bound)
            options = []
            for q2 in targets:
                b = bound[q2]
                even = b if b % 2 == 0 else b - 1
                odd = b if b % 2 == 1 else b - 1
                opts = {even}
                if q2 not in final and odd >= 0:
                    opts.add(odd)
                options.append(sorted(o for o in opts if o >= 0))
            for choice in itertools.product(*options):
                new_rank = tuple(zip(targets, choice))
                evens = {q for q, r in new_rank if r % 2 == 0}
                if owing:
                    carried = {q2 for q in owing for g, q2 in a.succ[q]
                               if a.alphabet.conj(g, m) is not None}
                    new_owing = frozenset(carried & evens)
                else:
                    new_owing = frozenset(evens)
                yield m, (new_rank, new_owing)

    start = (((a.initial, top),), frozenset())
    out = _renumber(start, succ, lambda nd: not nd[1], a.alphabet, cap)
    return trim(out)


def complement_safra(a: BuchiAutomaton, cap=None) -> BuchiAutomaton:
    """Complement through determinization to a parity automaton.

    The result is semi-deterministic: nondeterminism is confined to the
    single jump into the tracking phase.
    """
    cap = cap or max_states()
    start, table, letters = determinize(a, cap)
    return _parity_to_buchi(start, table, letters, 1, a.alphabet, cap)


def buchi_complement(a: BuchiAutomaton, method="safra", cap=None) -> BuchiAutomaton:
    if method == "rank":
        return complement_rank(a, cap)
    if method == "safra":
        return complement_safra(a, cap)
    raise ValueError(f"unknown complementation method {method!r}")


def buchi_boolean(kind, a, b=None, **options):
    if kind == "union":
        return buchi_union(a, b)
    if kind in ("intersect", "intersection"):
        return buchi_intersect(a, b)
    if kind == "complement":
        return buchi_complement(a, **options)
    raise ValueError(f"unknown Boolean operation {kind!r}")


def buchi_project(a: BuchiAutomaton, drop) -> BuchiAutomaton:
    """Existential projection: forget the propositions in ``drop``."""
    if not a.alphabet.propositional:
        raise CapabilityError("projection needs a propositional alphabet")
    drop = frozenset(drop)
    trans = [(q, a.alphabet.project(g, drop), r) for q, g, r in a.transitions]
    return BuchiAutomaton(a.states, a.initial, trans, a.final, a.alphabet.without(drop))


# ---------------------------------------------------------- serialization


def buchi_to_json(a: BuchiAutomaton):
    data = {"kind": "buchi", "states": a.states, "initial": a.initial,
            "final": sorted(a.final),
            "transitions": [[q, a.alphabet.guard_to_json(g), r] for q, g, r in a.transitions]}
    data.update(a.alphabet.to_json())
    return data


def buchi_from_json(data, where="$"):
    if isinstance(data, str):
        data = loads(data)
    if data.get("kind") != "buchi":
        raise SchemaError("expected kind 'buchi'", where)
    alphabet = alphabet_from_json(data, where)
    try:
        n = int(data["states"])
        trans = []
        for i, t in enumerate(data["transitions"]):
            if not isinstance(t, list) or len(t) != 3:
                raise SchemaError("transition must be [q, letter, q']",
                                  f"{where}.transitions[{i}]")
            trans.append((int(t[0]), alphabet.guard_from_json(t[1], f"{where}.transitions[{i}]"),
                          int(t[2])))
        initial = data.get("initial", 0)
        if isinstance(initial, list):
            return from_initial_set(n, initial, trans, data.get("final", []), alphabet)
        return BuchiAutomaton(n, int(initial), trans, data.get("final", []), alphabet)
    except (KeyError, TypeError, ValueError) as e:
        raise SchemaError(f"malformed automaton: {e}", where) from None


def buchi_dumps(a):
    return dumps(buchi_to_json(a))


def _dot_label(text):
    return str(text).replace("\\", "\\\\").replace('"', '\\"')


def buchi_to_dot(a: BuchiAutomaton, name="buchi"):
    lines = [f"digraph {name} {{", "  rankdir=LR;", '  init [shape=point];']
    for q in range(a.states):
        shape = "doublecircle" if q in a.final else "circle"
        lines.append(f'  q{q} [shape={shape}, label="{q}"];')
    lines.append(f"  init -> q{a.initial};")
    for q, g, r in a.transitions:
        lines.append(f'  q{q} -> q{r} [label="{_dot_label(g)}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
