"""Linear-time layer: lasso evaluation and translation to Büchi automata."""

from __future__ import annotations

import itertools

from .. import buchi
from ..core import Cube, FragmentError, PropSet, ResourceLimit, max_states
from .syntax import (
    And, Always, Const, Eventually, Exists, Iff, Implies, Inner, Next, Not, Or, Prop,
    SomePath, AllPaths, Until, children,
)

# Labeled positions tried when searching for a witness of an existential.
EXISTS_SEARCH_LIMIT = 10


# ---------------------------------------------------------- evaluation


def _fold(stem_len, loop_len):
    n = stem_len + loop_len
    return [i + 1 for i in range(n - 1)] + [stem_len]


def _fixpoint(succ, step, start):
    v = [start] * len(succ)
    while True:
        nv = [step(i, v) for i in range(len(succ))]
        if nv == v:
            return v
        v = nv


def _unrollings(stem_len, loop_len, limit):
    """Lasso shapes (stem, loop) that describe the same positions, smallest first."""
    shapes = []
    for extra in range(loop_len + 1):
        for times in range(1, 5):
            s, l = stem_len + extra, loop_len * times
            if s + l <= limit:
                shapes.append((s, l))
    return sorted(shapes, key=lambda sl: (sl[0] + sl[1], sl))


def lasso_truth(f, stem_len, loop_len, atom):
    """Truth of ``f`` at every folded position of a lasso.

    ``atom(f, i)`` decides atomic formulas (propositions and bracketed inner
    formulas) at position ``i``.  Path quantifiers are transparent on words.
    Existentials are decided by searching labelings of bounded unrollings.
    """
    succ = _fold(stem_len, loop_len)
    n = len(succ)
    memo = {}

    def vec(g):
        if g in memo:
            return memo[g]
        if isinstance(g, Const):
            out = [g.value] * n
        elif isinstance(g, (Prop, Inner)):
            out = [bool(atom(g, i)) for i in range(n)]
        elif isinstance(g, Not):
            out = [not x for x in vec(g.arg)]
        elif isinstance(g, And):
            out = [x and y for x, y in zip(vec(g.left), vec(g.right))]
        elif isinstance(g, Or):
            out = [x or y for x, y in zip(vec(g.left), vec(g.right))]
        elif isinstance(g, Implies):
            out = [not x or y for x, y in zip(vec(g.left), vec(g.right))]
        elif isinstance(g, Iff):
            out = [x == y for x, y in zip(vec(g.left), vec(g.right))]
        elif isinstance(g, Next):
            if g.direction is not None:
                raise FragmentError("directed next needs tree-shaped elements")
            a = vec(g.arg)
            out = [a[succ[i]] for i in range(n)]
        elif isinstance(g, Eventually):
            a = vec(g.arg)
            out = _fixpoint(succ, lambda i, v: a[i] or v[succ[i]], False)
        elif isinstance(g, Always):
            a = vec(g.arg)
            out = _fixpoint(succ, lambda i, v: a[i] and v[succ[i]], True)
        elif isinstance(g, Until):
            a, b = vec(g.left), vec(g.right)
            out = _fixpoint(succ, lambda i, v: b[i] or (a[i] and v[succ[i]]), False)
        elif isinstance(g, (SomePath, AllPaths)):
            out = vec(g.arg)
        elif isinstance(g, Exists):
            out = _exists(g, stem_len, loop_len, atom)
        else:
            raise TypeError(f"not a formula: {g!r}")
        memo[g] = out
        return out

    return vec(f)


def _exists(g, stem_len, loop_len, atom):
    n = stem_len + loop_len
    out = [False] * n
    for s, l in _unrollings(stem_len, loop_len, max(EXISTS_SEARCH_LIMIT, n)):
        base = [i if i < stem_len else stem_len + (i - stem_len) % loop_len
                for i in range(s + l)]
        for bits in range(1 << (s + l)):
            def labeled(h, i, bits=bits, base=base):
                if isinstance(h, Prop) and h.name == g.var:
                    return bits >> i & 1
                return atom(h, base[i])

            v = lasso_truth(g.body, s, l, labeled)
            for j, ok in enumerate(v):
                if ok:
                    out[base[j]] = True
            if all(out):
                return out
    return out


def eval_lasso(f, word, position=0, atom=None):
    """Truth of an LTL formula on a lasso word of proposition sets."""
    if atom is None:
        def atom(h, i):
            if isinstance(h, Inner):
                raise FragmentError("bracketed formula in a single-layer evaluation")
            return h.name in word[i]
    v = lasso_truth(f, len(word.stem), len(word.loop), atom)
    i = position
    if i >= len(v):
        i = len(word.stem) + (i - len(word.stem)) % len(word.loop)
    return v[i]


# ------------------------------------------------------------ tableau
#
# Negation normal form uses tuples: ("true",), ("false",), ("ap", p),
# ("nap", p), ("and", a, b), ("or", a, b), ("X", a), ("U", a, b), ("R", a, b).


def nnf(f, negate=False):
    """Negation normal form of a temporal formula without quantifiers."""
    if isinstance(f, Const):
        return ("true",) if f.value != negate else ("false",)
    if isinstance(f, Prop):
        return ("nap", f.name) if negate else ("ap", f.name)
    if isinstance(f, Not):
        return nnf(f.arg, not negate)
    if isinstance(f, And):
        return ("or" if negate else "and", nnf(f.left, negate), nnf(f.right, negate))
    if isinstance(f, Or):
        return ("and" if negate else "or", nnf(f.left, negate), nnf(f.right, negate))
    if isinstance(f, Implies):
        return nnf(Or(Not(f.left), f.right), negate)
    if isinstance(f, Iff):
        both = And(Implies(f.left, f.right), Implies(f.right, f.left))
        return nnf(both, negate)
    if isinstance(f, Next):
        if f.direction is not None:
            raise FragmentError("directed next needs tree-shaped elements")
        return ("X", nnf(f.arg, negate))
    if isinstance(f, Eventually):
        return ("R", ("false",), nnf(f.arg, True)) if negate else ("U", ("true",), nnf(f.arg))
    if isinstance(f, Always):
        return ("U", ("true",), nnf(f.arg, True)) if negate else ("R", ("false",), nnf(f.arg))
    if isinstance(f, Until):
        if negate:
            return ("R", nnf(f.left, True), nnf(f.right, True))
        return ("U", nnf(f.left), nnf(f.right))
    if isinstance(f, (SomePath, AllPaths)):
        return nnf(f.arg, negate)
    if isinstance(f, Exists):
        raise FragmentError("quantifier below a temporal operator")
    raise FragmentError(f"unexpected {type(f).__name__} in a temporal formula")


def _expand(todo, pos, neg, nxt, postponed):
    """All consistent ways to satisfy the formulas in ``todo`` now."""
    if not todo:
        yield pos, neg, nxt, postponed
        return
    f, rest = todo[0], todo[1:]
    op = f[0]
    if op == "true":
        yield from _expand(rest, pos, neg, nxt, postponed)
    elif op == "false":
        return
    elif op == "ap":
        if f[1] not in neg:
            yield from _expand(rest, pos | {f[1]}, neg, nxt, postponed)
    elif op == "nap":
        if f[1] not in pos:
            yield from _expand(rest, pos, neg | {f[1]}, nxt, postponed)
    elif op == "and":
        yield from _expand((f[1], f[2]) + rest, pos, neg, nxt, postponed)
    elif op == "or":
        yield from _expand((f[1],) + rest, pos, neg, nxt, postponed)
        yield from _expand((f[2],) + rest, pos, neg, nxt, postponed)
    elif op == "X":
        yield from _expand(rest, pos, neg, nxt | {f[1]}, postponed)
    elif op == "U":
        yield from _expand((f[2],) + rest, pos, neg, nxt, postponed)
        yield from _expand((f[1],) + rest, pos, neg, nxt | {f}, postponed | {f})
    elif op == "R":
        yield from _expand((f[2], f[1]) + rest, pos, neg, nxt, postponed)
        yield from _expand((f[2],) + rest, pos, neg, nxt | {f}, postponed)
    else:
        raise ValueError(f"bad normal form {f!r}")


def _untils(f, out):
    if f[0] == "U":
        out.add(f)
    for c in f[1:]:
        if isinstance(c, tuple):
            _untils(c, out)
    return out


def _canon(parts):
    return tuple(tuple(sorted(map(repr, x))) for x in parts)


def tableau(f, alphabet: PropSet) -> buchi.BuchiAutomaton:
    """Büchi automaton for a quantifier-free formula.

    States are obligation sets.  An until that is put off to the next step is
    recorded on the transition; the generalized acceptance "each until is
    eventually not put off" is turned into a Büchi condition with a counter.
    """
    root = nnf(f)
    goals = sorted(_untils(root, set()), key=repr)
    m = len(goals)
    cap = max_states()
    index, order, trans = {}, [], []

    def intern(node):
        if node not in index:
            if len(order) >= cap:
                raise ResourceLimit(f"tableau exceeds {cap} states")
            index[node] = len(order)
            order.append(node)
        return index[node]

    expansions = {}
    intern((frozenset([root]), 0))
    done = 0
    while done < len(order):
        obligations, level = order[done]
        src = done
        done += 1
        if obligations not in expansions:
            key = tuple(sorted(obligations, key=repr))
            expansions[obligations] = sorted(
                {(frozenset(p), frozenset(n), frozenset(x), frozenset(u))
                 for p, n, x, u in _expand(key, frozenset(), frozenset(), frozenset(),
                                           frozenset())},
                key=_canon)
        start = 0 if level == m else level
        for pos, neg, nxt, postponed in expansions[obligations]:
            j = start
            while j < m and goals[j] not in postponed:
                j += 1
            trans.append((src, Cube(pos, neg), intern((nxt, j))))
    final = {i for i, (_, level) in enumerate(order) if level == m}
    a = buchi.BuchiAutomaton(len(order), 0, trans, final, alphabet)
    return buchi.trim(a)


def _mentions_exists(f):
    return isinstance(f, Exists) or any(_mentions_exists(c) for c in children(f))


def pltl_to_buchi(f, atoms) -> buchi.BuchiAutomaton:
    """Büchi automaton over ``atoms`` accepting exactly the models of ``f``.

    Existential quantifiers may occur under Boolean connectives; each
    quantified unit is translated separately and its variable projected away.
    """
    alphabet = PropSet(sorted(set(atoms)))
    return _units(f, alphabet, False)


def _units(f, alphabet, negate):
    if not _mentions_exists(f):
        return tableau(Not(f) if negate else f, alphabet.union(PropSet(sorted(_props(f)))))
    if isinstance(f, Not):
        return _units(f.arg, alphabet, not negate)
    if isinstance(f, (And, Or)):
        left = _units(f.left, alphabet, negate)
        right = _units(f.right, alphabet, negate)
        if isinstance(f, And) != negate:
            return buchi.buchi_intersect(left, right)
        return buchi.buchi_union(left, right)
    if isinstance(f, Implies):
        return _units(Or(Not(f.left), f.right), alphabet, negate)
    if isinstance(f, Exists):
        if negate:
            raise FragmentError("negated existential quantifier in the outer layer")
        body = _units(f.body, alphabet.union(PropSet([f.var])), False)
        return buchi.buchi_project(body, {f.var})
    raise FragmentError(f"quantifier below {type(f).__name__}")


def _props(f):
    if isinstance(f, Prop):
        return {f.name}
    out = set()
    for c in children(f):
        out |= _props(c)
    return out


def widen(a: buchi.BuchiAutomaton, alphabet: PropSet) -> buchi.BuchiAutomaton:
    """Same automaton read over a larger proposition set."""
    return buchi.BuchiAutomaton(a.states, a.initial, a.transitions, a.final,
                                a.alphabet.union(alphabet))


def all_formulas(atoms, max_size):
    """Every formula up to ``max_size`` built from ``atoms`` with ! X F G & | U."""
    by_size = {1: [Prop(p) for p in atoms]}
    for s in range(2, max_size + 1):
        out = []
        for g in by_size[s - 1]:
            out += [Not(g), Next(g), Eventually(g), Always(g)]
        for ls in range(1, s - 1):
            for l, r in itertools.product(by_size[ls], by_size[s - 1 - ls]):
                out += [And(l, r), Or(l, r), Until(l, r)]
        by_size[s] = out
    return [f for s in range(1, max_size + 1) for f in by_size[s]]
