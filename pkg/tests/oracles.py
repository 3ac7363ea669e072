"""Independent brute-force oracles shared by the test-suite.

Nothing here imports the algorithms under test; each function computes
its answer by plain enumeration.
"""

import itertools
import random


def semigroup_brute(weights, bound=200):
    """All sums Σ x_i·w_i that are <= bound, by direct enumeration."""
    weights = sorted(set(weights))
    ranges = [range(bound // w + 1) for w in weights]
    out = set()
    for xs in itertools.product(*ranges):
        s = sum(x * w for x, w in zip(xs, weights))
        if s <= bound:
            out.add(s)
    return out


def path_lengths_bfs(nodes, edges, q1, q2, bound):
    """Lengths <= bound of walks q1 -> q2, by layered breadth-first search."""
    succ = {u: [v for (x, v) in edges if x == u] for u in range(nodes)}
    layer = {q1}
    out = set()
    for t in range(bound + 1):
        if q2 in layer:
            out.add(t)
        layer = {v for u in layer for v in succ[u]}
    return out


def random_graph(rng: random.Random, max_nodes=6, density=0.3):
    n = rng.randint(1, max_nodes)
    edges = [(u, v) for u in range(n) for v in range(n) if rng.random() < density]
    return n, edges, rng.randrange(n), rng.randrange(n)


def unfold_member(exceptions, offset, period, residues, x):
    """Membership in E ∪ {x >= k : (x-k) mod d in R} spelled out."""
    if x in exceptions:
        return True
    if period == 0 or x < offset:
        return False
    return (x - offset) % period in residues


def lasso_accepts_matrix(states, initial, final, step, stem, loop):
    """Büchi acceptance of stem·loop^ω via reachability relations.

    ``step(q, letter)`` lists successor states.  The loop is summarized as a
    relation on states annotated with "passed a final state"; the word is
    accepted when some state reachable after stem·loop^i returns to itself
    through loop^+ while passing a final state.
    """
    def compose(rel, letter):
        out = set()
        for (p, q, flag) in rel:
            for r in step(q, letter):
                out.add((p, r, flag or r in final))
        return out

    cur = {initial}
    for a in stem:
        cur = {r for q in cur for r in step(q, a)}
    # relation of one loop traversal
    rel = {(q, q, q in final) for q in range(states)}
    for a in loop:
        rel = compose(rel, a)
    # transitive closure of the loop relation, keeping the flag
    closure = set(rel)
    while True:
        extra = {(p, r, f1 or f2) for (p, q, f1) in closure for (q2, r, f2) in rel if q == q2}
        if extra <= closure:
            break
        closure |= extra
    reach = set(cur) | {r for (p, r, _) in closure if p in cur}
    return any((q, q, True) in closure for q in reach)


def fta_accepts_topdown(a, t):
    """Top-down run search, independent of the bottom-up state sets."""
    m = a.alphabet.matches

    def can(node, q, table):
        if not node.children:
            return any(p == q and m(g, node.letter) for p, g in a.leaf)
        return any(p == q and m(g, node.letter)
                   and all(can(c, s, a.internal) for c, s in zip(node.children, cs))
                   for p, g, cs in table)

    table = a.root if a.mode == "almost" else a.internal
    return any(can(t, q, table) for q in a.accepting)



def buchi_tree_wins(a, tree=None):
    """Büchi tree automaton acceptance by the fixpoint nu Z. mu Y.

    ``a`` has the single pair (empty, F).  Without ``tree`` this decides
    nonemptiness; with a RegularTree it decides membership on the product
    of generator vertices and states.
    """
    [(lo, final)] = a.pairs
    assert not lo
    if tree is None:
        nodes = [(None, q) for q in range(a.states)]
    else:
        nodes = [(v, q) for v in range(len(tree.labels)) for q in range(a.states)]

    def moves(node):
        v, q = node
        for p, g, cs in a.transitions:
            if p != q:
                continue
            if tree is None:
                yield [(None, c) for c in cs]
            elif a.alphabet.matches(g, tree.labels[v]):
                yield [(tree.succ[v][d], c) for d, c in enumerate(cs)]

    def cpre(target):
        return {n for n in nodes if any(all(c in target for c in kids) for kids in moves(n))}

    z = set(nodes)
    while True:
        y = set()
        while True:
            y2 = {n for n in cpre(z) if n[1] in final} | cpre(y)
            if y2 == y:
                break
            y = y2
        if y == z:
            break
        z = y
    start = (None if tree is None else tree.start, a.initial)
    return start in z


def ltl_on_lasso(f, stem, loop, i=0):
    """Linear-time truth at position i of stem·loop^ω by unrolled search.

    Formulas are matched by class name so the oracle stays independent of
    the evaluator under test.  Every suffix of a lasso equals one starting
    before len(stem) + len(loop), so Until looks that far ahead.
    """
    n = len(stem) + len(loop)

    def letter(j):
        return stem[j] if j < len(stem) else loop[(j - len(stem)) % len(loop)]

    def go(g, j):
        name = type(g).__name__
        if name == "Const":
            return g.value
        if name == "Prop":
            return g.name in letter(j)
        if name == "Not":
            return not go(g.arg, j)
        if name == "And":
            return go(g.left, j) and go(g.right, j)
        if name == "Or":
            return go(g.left, j) or go(g.right, j)
        if name == "Implies":
            return not go(g.left, j) or go(g.right, j)
        if name == "Iff":
            return go(g.left, j) == go(g.right, j)
        if name == "Next":
            return go(g.arg, j + 1)
        if name == "Eventually":
            return any(go(g.arg, j + t) for t in range(n + 1))
        if name == "Always":
            return all(go(g.arg, j + t) for t in range(n + 1))
        if name == "Until":
            for t in range(n + 1):
                if go(g.right, j + t):
                    return True
                if not go(g.left, j + t):
                    return False
            return False
        raise ValueError(name)

    return go(f, i)
