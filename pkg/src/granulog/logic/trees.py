"""Branching layer: evaluation on finite trees and compilation to tree automata.

Paths are maximal root-to-leaf node sequences.  On a path, ``X`` needs a next
node, ``Xd`` needs the next node to be the d-th child, and ``F``/``G``/``U``
range over the remaining finite suffix.
"""

from __future__ import annotations

import itertools

from ..core import Cube, FragmentError, PropSet, ResourceLimit, max_states
from ..ftree import (
    TreeAutomaton, determinize, empty_fta, fta_complement, fta_intersect, fta_project,
    fta_shape, fta_union, reachable_trim, universal_fta,
)
from .syntax import (
    AllPaths, Always, And, Const, Eventually, Exists, Iff, Implies, Next, Not, Or, Prop,
    SomePath, Until, children,
)

PATH_OPERATORS = (Next, Eventually, Always, Until)


def check_state(f, in_path=False):
    """Reject temporal operators that are not under a path quantifier."""
    if isinstance(f, PATH_OPERATORS) and not in_path:
        raise FragmentError(f"{type(f).__name__} needs an enclosing E or A inside brackets")
    if isinstance(f, (SomePath, AllPaths)):
        check_state(f.arg, True)
    elif isinstance(f, Exists):
        check_state(f.body, False)
    else:
        for c in children(f):
            check_state(c, in_path)


# ----------------------------------------------------------- evaluation


class _TreeView:
    """Nodes of one tree addressed by their paths."""

    def __init__(self, tree):
        self.node = dict(tree.nodes())

    def kids(self, path):
        n = self.node[path]
        return [path + (d,) for d in n.child_indices()]

    def below(self, path):
        return [p for p in self.node if p[:len(path)] == path]

    def paths_from(self, path):
        kids = self.kids(path)
        if not kids:
            yield [path]
            return
        for c in kids:
            for rest in self.paths_from(c):
                yield [path] + rest


def eval_tree(f, tree, env=None):
    """Truth of an inner state formula at the root of a finite tree."""
    check_state(f)
    view = _TreeView(tree)
    return _state(f, view, (), dict(env or {}))


def _state(f, view, at, env):
    if isinstance(f, Const):
        return f.value
    if isinstance(f, Prop):
        if f.name in env:
            return at in env[f.name]
        return f.name in view.node[at].letter
    if isinstance(f, Not):
        return not _state(f.arg, view, at, env)
    if isinstance(f, And):
        return _state(f.left, view, at, env) and _state(f.right, view, at, env)
    if isinstance(f, Or):
        return _state(f.left, view, at, env) or _state(f.right, view, at, env)
    if isinstance(f, Implies):
        return not _state(f.left, view, at, env) or _state(f.right, view, at, env)
    if isinstance(f, Iff):
        return _state(f.left, view, at, env) == _state(f.right, view, at, env)
    if isinstance(f, SomePath):
        return any(_path(f.arg, view, p, 0, env) for p in view.paths_from(at))
    if isinstance(f, AllPaths):
        return all(_path(f.arg, view, p, 0, env) for p in view.paths_from(at))
    if isinstance(f, Exists):
        nodes = view.below(at)
        for bits in range(1 << len(nodes)):
            marked = frozenset(n for i, n in enumerate(nodes) if bits >> i & 1)
            if _state(f.body, view, at, {**env, f.var: marked}):
                return True
        return False
    raise FragmentError(f"{type(f).__name__} needs an enclosing E or A inside brackets")


def _path(f, view, path, i, env):
    if isinstance(f, Next):
        if i + 1 >= len(path):
            return False
        if f.direction is not None and path[i + 1][-1] != f.direction:
            return False
        return _path(f.arg, view, path, i + 1, env)
    if isinstance(f, Eventually):
        return any(_path(f.arg, view, path, j, env) for j in range(i, len(path)))
    if isinstance(f, Always):
        return all(_path(f.arg, view, path, j, env) for j in range(i, len(path)))
    if isinstance(f, Until):
        for j in range(i, len(path)):
            if _path(f.right, view, path, j, env):
                return True
            if not _path(f.left, view, path, j, env):
                return False
        return False
    if isinstance(f, Not):
        return not _path(f.arg, view, path, i, env)
    if isinstance(f, And):
        return _path(f.left, view, path, i, env) and _path(f.right, view, path, i, env)
    if isinstance(f, Or):
        return _path(f.left, view, path, i, env) or _path(f.right, view, path, i, env)
    if isinstance(f, Implies):
        return not _path(f.left, view, path, i, env) or _path(f.right, view, path, i, env)
    if isinstance(f, Iff):
        return _path(f.left, view, path, i, env) == _path(f.right, view, path, i, env)
    return _state(f, view, path[i], env)


# ---------------------------------------------------------- compilation
#
# Normal form tuples: ("true",), ("false",), ("lit", name, positive),
# ("and", a, b), ("or", a, b), ("E", path), ("X", a), ("WX", a),
# ("Xd", d, a), ("WXd", d, a), ("U", a, b), ("R", a, b).  WX is the weak
# next (vacuous at a leaf); WXd is also vacuous when the path turns elsewhere.


def _canon(x):
    if isinstance(x, frozenset):
        return "{" + ",".join(sorted(_canon(y) for y in x)) + "}"
    if isinstance(x, tuple):
        return "(" + ",".join(_canon(y) for y in x) + ")"
    return repr(x)


class _Normalizer:
    """Negation normal form; quantified propositions become components."""

    def __init__(self):
        self.components = {}

    def component(self, g):
        if g not in self.components:
            self.components[g] = f"@{len(self.components)}"
        return self.components[g]

    def __call__(self, f, neg=False):
        go = self
        if isinstance(f, Const):
            return ("true",) if f.value != neg else ("false",)
        if isinstance(f, Prop):
            return ("lit", f.name, not neg)
        if isinstance(f, Not):
            return go(f.arg, not neg)
        if isinstance(f, (And, Or)):
            op = "and" if isinstance(f, And) != neg else "or"
            return (op, go(f.left, neg), go(f.right, neg))
        if isinstance(f, Implies):
            return go(Or(Not(f.left), f.right), neg)
        if isinstance(f, Iff):
            return go(Or(And(f.left, f.right), And(Not(f.left), Not(f.right))), neg)
        if isinstance(f, Next):
            a = go(f.arg, neg)
            if f.direction is None:
                return ("WX", a) if neg else ("X", a)
            return ("WXd" if neg else "Xd", f.direction, a)
        if isinstance(f, Eventually):
            return ("R", ("false",), go(f.arg, True)) if neg else ("U", ("true",), go(f.arg))
        if isinstance(f, Always):
            return ("U", ("true",), go(f.arg, True)) if neg else ("R", ("false",), go(f.arg))
        if isinstance(f, Until):
            if neg:
                return ("R", go(f.left, True), go(f.right, True))
            return ("U", go(f.left), go(f.right))
        if isinstance(f, SomePath):
            return ("A", go(f.arg, True)) if neg else ("E", go(f.arg))
        if isinstance(f, AllPaths):
            return ("E", go(f.arg, True)) if neg else ("A", go(f.arg))
        if isinstance(f, Exists):
            return ("lit", self.component(f), not neg)
        raise TypeError(f"not a formula: {f!r}")


def _merge_req(r1, r2):
    """Combine "no next needed" (None), "some next" and "next is child d"."""
    if r1 is None or r1 == "next":
        return r2 if r2 is not None else r1
    if r2 is None or r2 == "next" or r2 == r1:
        return r1
    return False


def _expand_thread(todo, pos, neg, spawns, req, nxt, dnxt):
    if not todo:
        yield pos, neg, spawns, req, nxt, dnxt
        return
    f, rest = todo[0], todo[1:]
    op = f[0]
    if op == "true":
        yield from _expand_thread(rest, pos, neg, spawns, req, nxt, dnxt)
    elif op == "lit":
        _, name, positive = f
        if positive and name not in neg:
            yield from _expand_thread(rest, pos | {name}, neg, spawns, req, nxt, dnxt)
        elif not positive and name not in pos:
            yield from _expand_thread(rest, pos, neg | {name}, spawns, req, nxt, dnxt)
    elif op == "and":
        yield from _expand_thread((f[1], f[2]) + rest, pos, neg, spawns, req, nxt, dnxt)
    elif op == "or":
        yield from _expand_thread((f[1],) + rest, pos, neg, spawns, req, nxt, dnxt)
        yield from _expand_thread((f[2],) + rest, pos, neg, spawns, req, nxt, dnxt)
    elif op in ("E", "A"):
        yield from _expand_thread(rest, pos, neg, spawns | {f}, req, nxt, dnxt)
    elif op in ("X", "WX"):
        r = _merge_req(req, "next") if op == "X" else req
        yield from _expand_thread(rest, pos, neg, spawns, r, nxt | {f[1]}, dnxt)
    elif op in ("Xd", "WXd"):
        r = _merge_req(req, f[1]) if op == "Xd" else req
        if r is not False:
            yield from _expand_thread(rest, pos, neg, spawns, r, nxt, dnxt | {(f[1], f[2])})
    elif op == "U":
        yield from _expand_thread((f[2],) + rest, pos, neg, spawns, req, nxt, dnxt)
        r = _merge_req(req, "next")
        if r is not False:
            yield from _expand_thread((f[1],) + rest, pos, neg, spawns, r, nxt | {f}, dnxt)
    elif op == "R":
        yield from _expand_thread((f[2], f[1]) + rest, pos, neg, spawns, req, nxt, dnxt)
        yield from _expand_thread((f[2],) + rest, pos, neg, spawns, req, nxt | {f}, dnxt)
    elif op != "false":
        raise ValueError(f"bad normal form {f!r}")


def _scan(f, lits, universal):
    """Collect literal names and note whether a universal path quantifier occurs."""
    if f[0] == "lit":
        lits.add(f[1])
    elif f[0] == "A":
        universal.append(True)
    for c in f[1:]:
        if isinstance(c, tuple):
            _scan(c, lits, universal)


def _minimal(sets):
    """Drop obligation sets that contain another one (a weaker disjunct)."""
    sets = sorted(set(sets), key=len)
    out = []
    for s in sets:
        if not any(t <= s for t in out):
            out.append(s)
    return frozenset(out)


def _child_obligations(nxt, dnxt, d):
    return frozenset(nxt | {a for e, a in dnxt if e == d})


class _ThreadAutomaton:
    """Nondeterministic automaton whose states are sets of pending paths.

    A state pairs existential threads with universal ones.  An existential
    thread is the set of obligations one chosen path still has to meet from
    the current node down; at a node it picks how to meet them now and which
    child the path continues into.  A universal thread is a disjunction of
    such sets that every path below must meet; given the node's letter it
    moves deterministically into every child, so no subset construction is
    needed.  Quantifiers nested in a path start new threads at the node
    where they are asserted.
    """

    def __init__(self, k, mode):
        self.k = k
        self.mode = mode
        self.memo = {}

    def branches(self, conjunct):
        if conjunct not in self.memo:
            todo = tuple(sorted(conjunct, key=_canon))
            empty = frozenset()
            found = set(_expand_thread(todo, empty, empty, empty, None, empty, empty))
            self.memo[conjunct] = sorted(found, key=_canon)
        return self.memo[conjunct]

    def options(self, state):
        """(pos, neg, existential continuations, universal continuations) per node move."""
        exist, univ = state
        lits, universal = set(), []
        for f in [g for t in exist for g in t] + [g for d in univ for t in d for g in t]:
            _scan(f, lits, universal)
        # universal threads need every literal they might test to be decided
        decided = sorted(lits) if universal or univ else []
        items = [("E", t) for t in sorted(exist, key=_canon)]
        items += [("A", d) for d in sorted(univ, key=_canon)]
        out = []
        for bits in itertools.product((False, True), repeat=len(decided)):
            pos = frozenset(n for n, b in zip(decided, bits) if b)
            self._serve(tuple(items), pos, frozenset(decided) - pos, (), (), out)
        return out

    def _serve(self, pending, pos, neg, econts, aconts, out):
        if not pending:
            out.append((pos, neg, econts, aconts))
            return
        (kind, thread), rest = pending[0], pending[1:]
        if kind == "E":
            for p, n, spawns, req, nxt, dnxt in self.branches(thread):
                if (pos | p) & (neg | n):
                    continue
                cont = econts + ((req, nxt, dnxt),) if (req is not None or nxt or dnxt) else econts
                self._serve(rest + _spawned(spawns), pos | p, neg | n, cont, aconts, out)
            return
        plain, guarded = [], {}
        for conjunct in sorted(thread, key=_canon):
            for p, n, spawns, req, nxt, dnxt in self.branches(conjunct):
                if p & neg or n & pos:
                    continue
                if spawns:
                    guarded.setdefault(spawns, []).append((req, nxt, dnxt))
                else:
                    plain.append((req, nxt, dnxt))
        if any(req is None and not nxt and not dnxt for req, nxt, dnxt in plain):
            self._serve(rest, pos, neg, econts, aconts, out)
            return
        groups = sorted(guarded, key=_canon)
        for chosen in itertools.product((False, True), repeat=len(groups)):
            enabled = list(plain)
            more = ()
            for spawns, on in zip(groups, chosen):
                if on:
                    enabled += guarded[spawns]
                    more += _spawned(spawns)
            if enabled:
                self._serve(rest + more, pos, neg, econts, aconts + (tuple(enabled),), out)

    def moves(self, econts, aconts, directions, arity, offset):
        """Child states when the node has children in ``directions``."""
        univ = [[] for _ in range(arity)]
        for enabled in aconts:
            for d in directions:
                dnf = _minimal(_child_obligations(nxt, dnxt, d) for req, nxt, dnxt in enabled
                               if req is None or req == "next" or req == d)
                if not dnf:
                    return
                if frozenset() not in dnf:
                    univ[d - offset].append(dnf)
        choices = []
        for req, _, _ in econts:
            if req is None or req == "next":
                choices.append(directions)
            else:
                choices.append([req] if req in directions else [])
        for picks in itertools.product(*choices):
            exist = [set() for _ in range(arity)]
            for (_, nxt, dnxt), d in zip(econts, picks):
                obligations = _child_obligations(nxt, dnxt, d)
                if obligations:
                    exist[d - offset].add(obligations)
            yield tuple((frozenset(e), frozenset(u)) for e, u in zip(exist, univ))

    def build(self, formula, alphabet):
        k, almost = self.k, self.mode == "almost"
        start = (frozenset([frozenset([formula])]), frozenset())
        index, order = {}, []
        cap = max_states()

        def intern(s):
            if s not in index:
                if len(order) >= cap:
                    raise ResourceLimit(f"path automaton exceeds {cap} states")
                index[s] = len(order)
                order.append(s)
            return index[s]

        intern(start)
        leaf, internal, root = set(), set(), set()
        done = 0
        while done < len(order):
            state = order[done]
            q = done
            done += 1
            for pos, neg, econts, aconts in self.options(state):
                g = Cube(pos, neg)
                if (all(req is None for req, _, _ in econts)
                        and all(any(c[0] is None for c in enabled) for enabled in aconts)):
                    leaf.add((q, g))
                for kids in self.moves(econts, aconts, range(k), k, 0):
                    internal.add((q, g, tuple(intern(c) for c in kids)))
                if almost and q == 0:
                    for kids in self.moves(econts, aconts, range(1, k), k - 1, 1):
                        root.add((q, g, tuple(intern(c) for c in kids)))
        key = lambda t: (t[0], _canon((t[1].pos, t[1].neg)), t[2:])
        return TreeAutomaton(k, len(order), sorted(leaf, key=key), sorted(internal, key=key),
                             {0}, alphabet, self.mode, sorted(root, key=key))


def _spawned(spawns):
    """Threads started by nested path quantifiers."""
    out = []
    for kind, path in sorted(spawns, key=_canon):
        if kind == "E":
            out.append(("E", frozenset([path])))
        else:
            out.append(("A", frozenset([frozenset([path])])))
    return tuple(out)


def _deterministic_tables(d: TreeAutomaton):
    """Lookup functions letter -> state for a complete deterministic automaton."""
    conj = d.alphabet.conj

    def table(rows):
        out = {}
        for q, g, cs in rows:
            out.setdefault(cs, []).append((g, q))
        return out

    internal, root = table(d.internal), table(d.root)

    def pick(rows, m):
        for g, q in rows:
            if conj(g, m) is not None:
                return q
        raise ValueError("automaton is not complete")

    return (lambda m: pick([(g, q) for q, g in d.leaf], m),
            lambda m, cs: pick(internal[cs], m),
            lambda m, cs: pick(root[cs], m))


def _consistency(name, complete, almost, k, mode):
    """Automaton forcing proposition ``name`` to mark where a component holds.

    ``complete`` decides the component on complete subtrees; in almost mode
    ``almost`` decides it at the root of the whole tree.
    """
    _, dc = determinize(complete)
    alphabet = dc.alphabet
    here = Cube({name})
    not_here = Cube((), {name})

    def mark(m, holds):
        return Cube(m.pos | (here.pos if holds else frozenset()),
                    m.neg | (frozenset() if holds else not_here.neg))

    if mode == "complete":
        leaf = [(q, mark(g, q in dc.accepting)) for q, g in dc.leaf]
        internal = [(q, mark(g, q in dc.accepting), cs) for q, g, cs in dc.internal]
        return TreeAutomaton(k, dc.states, leaf, internal, range(dc.states),
                             alphabet.union(PropSet([name])))
    _, da = determinize(almost)
    alphabet = alphabet.union(da.alphabet)
    letters = list(alphabet.minterms(dc.guards() + da.guards()))
    c_leaf, c_step, _ = _deterministic_tables(dc)
    a_leaf, a_step, a_root = _deterministic_tables(da)
    index, order = {}, []

    def intern(s):
        if s not in index:
            index[s] = len(order)
            order.append(s)
        return index[s]

    leaf, internal, root = [], [], []
    for m in letters:
        qc, qa = c_leaf(m), a_leaf(m)
        leaf.append((intern(("in", qc, qa)), mark(m, qc in dc.accepting)))
        leaf.append((intern(("top", qa)), mark(m, qa in da.accepting)))
    inner = [s for s in order if s[0] == "in"]
    done = 0
    while done < len(inner):
        i = done
        done += 1
        for combo in itertools.product(range(i + 1), repeat=k):
            if i not in combo:
                continue
            cs = [inner[j] for j in combo]
            for m in letters:
                qc = c_step(m, tuple(s[1] for s in cs))
                qa = a_step(m, tuple(s[2] for s in cs))
                s = ("in", qc, qa)
                if s not in index:
                    inner.append(s)
                internal.append((intern(s), mark(m, qc in dc.accepting),
                                 tuple(index[c] for c in cs)))
    for combo in itertools.product(inner, repeat=k - 1):
        for m in letters:
            qa = a_root(m, tuple(s[2] for s in combo))
            root.append((intern(("top", qa)), mark(m, qa in da.accepting),
                         tuple(index[c] for c in combo)))
    accepting = {i for i, s in enumerate(order) if s[0] == "top"}
    return TreeAutomaton(k, len(order), leaf, internal, accepting,
                         alphabet.union(PropSet([name])), mode, root)


def _props(f):
    if isinstance(f, Prop):
        return {f.name}
    out = set()
    for c in children(f):
        out |= _props(c)
    return out


def _quantifier_at_top(f):
    """Does a proposition quantifier sit among the top-level Booleans?"""
    if isinstance(f, (Not, And, Or, Implies, Iff)):
        return any(_quantifier_at_top(c) for c in children(f))
    return isinstance(f, Exists)


def _compile(f, k, mode, neg=False):
    alphabet = PropSet(sorted(_props(f)))
    if isinstance(f, Not):
        return _compile(f.arg, k, mode, not neg)
    if isinstance(f, Implies) and _quantifier_at_top(f):
        return _compile(Or(Not(f.left), f.right), k, mode, neg)
    if isinstance(f, Iff) and _quantifier_at_top(f):
        return _compile(Or(And(f.left, f.right), And(Not(f.left), Not(f.right))), k, mode, neg)
    if isinstance(f, (And, Or)) and _quantifier_at_top(f):
        left, right = _compile(f.left, k, mode, neg), _compile(f.right, k, mode, neg)
        if isinstance(f, And) != neg:
            return reachable_trim(fta_intersect(left, right))
        return fta_union(left, right)
    if isinstance(f, Exists):
        a = fta_project(_compile(f.body, k, mode), {f.var})
        return fta_complement(a) if neg else a
    if isinstance(f, Const):
        return universal_fta(k, alphabet, mode) if f.value != neg else empty_fta(k, alphabet, mode)
    normal = _Normalizer()
    body = normal(f, neg)
    a = _ThreadAutomaton(k, mode).build(body, alphabet.union(PropSet(normal.components.values())))
    for g, name in normal.components.items():
        complete = _compile(g, k, "complete")
        almost = _compile(g, k, "almost") if mode == "almost" else None
        a = reachable_trim(fta_intersect(a, _consistency(name, complete, almost, k, mode)))
    if normal.components:
        a = fta_project(a, set(normal.components.values()))
    return a


def pathctl_to_fta(f, k, mode="complete", depth=None) -> TreeAutomaton:
    """Tree automaton accepting the finite trees whose root satisfies ``f``."""
    _check_directions(f, k)
    check_state(f)
    a = _compile(f, k, mode)
    if depth is not None:
        a = fta_intersect(a, fta_shape(k, depth, PropSet(), mode))
    return reachable_trim(a)


def _check_directions(f, k):
    if isinstance(f, Next) and f.direction is not None and f.direction >= k:
        raise FragmentError(f"direction {f.direction} needs k > {f.direction}, got k = {k}")
    for c in children(f):
        _check_directions(c, k)
