"""Rabin automata on infinite k-ary trees.

A run labels every node of the input tree with a state, starting from the
initial state at the root and following a transition ``(q, guard, (q0..qk-1))``
at every node.  It is accepting when every path satisfies some pair (L, U):
states of L occur finitely often and some state of U infinitely often.

Emptiness and membership are decided by a game between Automaton, who
picks transitions, and Pathfinder, who picks directions.  The Rabin winning
condition becomes a parity condition through index appearance records: a
permutation of pair indices where pairs whose L-set was visited recently
sit at the front.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

from . import parity
from .core import (
    AlphabetMismatch, ArityError, CapabilityError, PropSet, RegularTree, ResourceLimit,
    SchemaError, SymbolTable, alphabet_from_json, check_letter, dumps, loads, max_states,
    require_same_alphabet,
)


@dataclass(frozen=True)
class RabinTreeAutomaton:
    k: int
    states: int
    initial: int
    transitions: tuple
    pairs: tuple
    alphabet: PropSet | SymbolTable

    def __post_init__(self):
        object.__setattr__(self, "transitions",
                           tuple((q, g, tuple(cs)) for q, g, cs in self.transitions))
        object.__setattr__(self, "pairs",
                           tuple((frozenset(lo), frozenset(hi)) for lo, hi in self.pairs))
        if self.k < 1:
            raise SchemaError("k must be positive")
        ok = range(self.states)
        if self.initial not in ok:
            raise SchemaError("initial state out of range")
        for q, _, cs in self.transitions:
            if len(cs) != self.k:
                raise ArityError(f"transition from {q} has {len(cs)} successors, expected {self.k}")
            if q not in ok or any(c not in ok for c in cs):
                raise SchemaError(f"transition from {q} mentions an unknown state")
        for lo, hi in self.pairs:
            if any(q not in ok for q in lo | hi):
                raise SchemaError("pair mentions an unknown state")

    @cached_property
    def succ(self):
        out = [[] for _ in range(self.states)]
        for t, (q, _, _) in enumerate(self.transitions):
            out[q].append(t)
        return out

    def __repr__(self):
        return (f"RabinTreeAutomaton(k={self.k}, states={self.states}, "
                f"pairs={len(self.pairs)}, transitions={len(self.transitions)})")


def empty_rabin(k, alphabet):
    return RabinTreeAutomaton(k, 1, 0, (), (), alphabet)


def universal_rabin(k, alphabet):
    gs = [alphabet.true_guard()] if alphabet.propositional else list(alphabet.names)
    return RabinTreeAutomaton(k, 1, 0, [(0, g, (0,) * k) for g in gs],
                              [((), (0,))], alphabet)


# ---------------------------------------------------------------- game


def iar_step(pairs, perm, q):
    """Visit state ``q`` with appearance record ``perm``.

    Returns (new_perm, priority).  A U-hit at position g scores 2g+2, an
    L-hit at position b scores 2b+3, no hit scores 1; the largest wins.
    """
    pri = 1
    bad = []
    for pos, i in enumerate(perm):
        lo, hi = pairs[i]
        if q in hi:
            pri = max(pri, 2 * pos + 2)
        if q in lo:
            pri = max(pri, 2 * pos + 3)
            bad.append(i)
    if bad:
        perm = tuple(bad) + tuple(i for i in perm if i not in bad)
    return perm, pri


SINK = ("sink",)


def _build_arena(a: RabinTreeAutomaton, tree: RegularTree | None, cap):
    """Game arena; positions are generator vertices, or None for emptiness."""
    game = parity.ParityGame()
    game.add_vertex(SINK, 1, 1)
    game.add_edge(SINK, SINK)
    matches = a.alphabet.matches

    def enter(pos, q, perm):
        perm2, pri = iar_step(a.pairs, perm, q)
        return ("A", pos, q, perm2, pri)

    start = enter(tree.start if tree else None, a.initial, tuple(range(len(a.pairs))))
    game.add_vertex(start, 0, start[4])
    todo = [start]
    while todo:
        v = todo.pop()
        if v[0] == "A":
            _, pos, q, perm, _ = v
            moves = [t for t in a.succ[q]
                     if tree is None or matches(a.transitions[t][1], tree.labels[pos])]
            if not moves:
                game.add_edge(v, SINK)
            for t in moves:
                w = ("P", pos, t, perm)
                if w not in game.owner:
                    game.add_vertex(w, 1, 0)
                    todo.append(w)
                game.add_edge(v, w)
        else:
            _, pos, t, perm = v
            cs = a.transitions[t][2]
            for d in range(a.k):
                nxt = tree.succ[pos][d] if tree else None
                w = enter(nxt, cs[d], perm)
                if w not in game.owner:
                    game.add_vertex(w, 0, w[4])
                    todo.append(w)
                game.add_edge(v, w)
        if len(game) > cap:
            raise ResourceLimit(f"acceptance game exceeds {cap} vertices")
    return game, start


def arena_size(a: RabinTreeAutomaton, cap=None):
    """Number of vertices of the emptiness game (a scaling measure)."""
    game, _ = _build_arena(a, None, cap or max_states())
    return len(game)


def _strategy_tree(a, game, start, strategy):
    """RegularTree unfolded from Automaton's winning strategy."""
    index = {}
    labels = []
    succ = []
    order = [start]
    index[start] = 0
    i = 0
    while i < len(order):
        v = order[i]
        i += 1
        p = strategy[v]
        _, _, t, _ = p
        labels.append(a.alphabet.witness(a.transitions[t][1]))
        kids = []
        for w in game.succ[p]:
            if w not in index:
                index[w] = len(order)
                order.append(w)
            kids.append(index[w])
        succ.append(kids)
    return RegularTree(a.k, labels, succ, 0)


def rabin_empty(a: RabinTreeAutomaton, cap=None):
    """Return (is_empty, RegularTree witness or None)."""
    game, start = _build_arena(a, None, cap or max_states())
    win, strat = parity.solve(game)
    if start not in win[0]:
        return True, None
    return False, _strategy_tree(a, game, start, strat[0])


def rabin_member(a: RabinTreeAutomaton, t: RegularTree, cap=None) -> bool:
    if t.k != a.k:
        raise ArityError(f"tree has k={t.k}, automaton has k={a.k}")
    for letter in t.labels:
        check_letter(a.alphabet, letter)
    game, start = _build_arena(a, t, cap or max_states())
    win, _ = parity.solve(game)
    return start in win[0]


# ------------------------------------------------ union and projection


def rabin_union(a: RabinTreeAutomaton, b: RabinTreeAutomaton) -> RabinTreeAutomaton:
    """Disjoint sum with a fresh initial state copying both initial states."""
    if a.k != b.k:
        raise ArityError(f"k differs: {a.k} vs {b.k}")
    require_same_alphabet(a.alphabet, b.alphabet)
    if a.alphabet.propositional:
        alphabet = a.alphabet.union(b.alphabet)
    elif a.alphabet != b.alphabet:
        raise AlphabetMismatch("symbol tables differ")
    else:
        alphabet = a.alphabet
    s = a.states
    fresh = a.states + b.states
    trans = list(a.transitions)
    trans += [(q + s, g, tuple(c + s for c in cs)) for q, g, cs in b.transitions]
    trans += [(fresh, g, cs) for q, g, cs in a.transitions if q == a.initial]
    trans += [(fresh, g, tuple(c + s for c in cs)) for q, g, cs in b.transitions
              if q == b.initial]
    pairs = list(a.pairs) + [({q + s for q in lo}, {q + s for q in hi}) for lo, hi in b.pairs]
    return RabinTreeAutomaton(a.k, fresh + 1, fresh, trans, pairs, alphabet)


def rabin_project(a: RabinTreeAutomaton, drop) -> RabinTreeAutomaton:
    if not a.alphabet.propositional:
        raise CapabilityError("projection needs a propositional alphabet")
    drop = frozenset(drop)
    trans = [(q, a.alphabet.project(g, drop), cs) for q, g, cs in a.transitions]
    return RabinTreeAutomaton(a.k, a.states, a.initial, trans, a.pairs,
                              a.alphabet.without(drop))


# ---------------------------------------------------------- serialization


def rabin_to_json(a: RabinTreeAutomaton):
    gj = a.alphabet.guard_to_json
    data = {"kind": "rabin", "k": a.k, "states": a.states, "initial": a.initial,
            "transitions": [[q, gj(g), list(cs)] for q, g, cs in a.transitions],
            "pairs": [[sorted(lo), sorted(hi)] for lo, hi in a.pairs]}
    data.update(a.alphabet.to_json())
    return data


def rabin_from_json(data, where="$"):
    if isinstance(data, str):
        data = loads(data)
    if not isinstance(data, dict) or data.get("kind") != "rabin":
        raise SchemaError("expected kind 'rabin'", where)
    alphabet = alphabet_from_json(data, where)
    try:
        trans = []
        for i, t in enumerate(data["transitions"]):
            at = f"{where}.transitions[{i}]"
            if not isinstance(t, list) or len(t) != 3 or not isinstance(t[2], list):
                raise SchemaError("transition must be [q, letter, [q0, ..]]", at)
            trans.append((int(t[0]), alphabet.guard_from_json(t[1], at),
                          tuple(int(c) for c in t[2])))
        pairs = []
        for i, p in enumerate(data.get("pairs", [])):
            if not isinstance(p, list) or len(p) != 2:
                raise SchemaError("pair must be [L, U]", f"{where}.pairs[{i}]")
            pairs.append(([int(x) for x in p[0]], [int(x) for x in p[1]]))
        return RabinTreeAutomaton(int(data["k"]), int(data["states"]),
                                  int(data.get("initial", 0)), trans, pairs, alphabet)
    except (KeyError, TypeError, ValueError) as e:
        raise SchemaError(f"malformed Rabin automaton: {e}", where) from None


def rabin_dumps(a):
    return dumps(rabin_to_json(a))


def rabin_to_dot(a: RabinTreeAutomaton, name="rabin"):
    esc = lambda s: str(s).replace("\\", "\\\\").replace('"', '\\"')
    lines = [f"digraph {name} {{", '  init [shape=point];']
    for q in range(a.states):
        tags = [f"L{i}" for i, (lo, _) in enumerate(a.pairs) if q in lo]
        tags += [f"U{i}" for i, (_, hi) in enumerate(a.pairs) if q in hi]
        label = f"{q}" + (f" [{' '.join(tags)}]" if tags else "")
        lines.append(f'  q{q} [shape=circle, label="{label}"];')
    lines.append(f"  init -> q{a.initial};")
    for n, (q, g, cs) in enumerate(a.transitions):
        lines.append(f'  t{n} [shape=point, xlabel="{esc(g)}"];')
        lines.append(f"  q{q} -> t{n} [arrowhead=none];")
        for d, c in enumerate(cs):
            lines.append(f'  t{n} -> q{c} [label="{d}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
