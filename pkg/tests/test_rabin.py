import random

import pytest

from granulog import parity
from granulog.core import ArityError, CapabilityError, Cube, PropSet, RegularTree, ResourceLimit
from granulog.rabin import (
    RabinTreeAutomaton, arena_size, empty_rabin, iar_step, rabin_dumps, rabin_empty,
    rabin_from_json, rabin_member, rabin_project, rabin_to_dot, rabin_union,
    universal_rabin,
)
from gen import AB, all_regular_trees, random_rabin
from oracles import buchi_tree_wins

ALL = [(0, g, (0, 0)) for g in "ab"]
TREES = list(all_regular_trees(2, "ab", 1)) + list(all_regular_trees(2, "ab", 2))


def settle_in():
    """Every path eventually stays in state 1: 0 may loop, 1 only loops."""
    trans = [(0, "a", (0, 1)), (0, "a", (1, 1)), (0, "b", (1, 1)), (1, "a", (1, 1)),
             (1, "b", (1, 1))]
    return RabinTreeAutomaton(2, 2, 0, trans, [({0}, {1})], AB)


# ------------------------------------------------------------ parity core


def test_parity_small_game():
    g = parity.ParityGame()
    g.add_vertex("x", 0, 2)
    g.add_vertex("y", 1, 1)
    g.add_vertex("z", 0, 3)
    for u, v in [("x", "y"), ("y", "x"), ("y", "z"), ("z", "z")]:
        g.add_edge(u, v)
    (w0, w1), (s0, s1) = parity.solve(g)
    assert w0 == set() and w1 == {"x", "y", "z"}
    assert s1["y"] == "z"


def test_parity_regions_partition_random_games():
    rng = random.Random(1)
    for _ in range(50):
        g = parity.ParityGame()
        n = rng.randint(1, 8)
        for v in range(n):
            g.add_vertex(v, rng.randint(0, 1), rng.randint(0, 4))
        for v in range(n):
            for w in rng.sample(range(n), rng.randint(1, min(3, n))):
                g.add_edge(v, w)
        (w0, w1), (s0, s1) = parity.solve(g)
        assert w0 | w1 == set(range(n)) and not w0 & w1
        # strategies stay inside the winning region and win every cycle
        for player, win, strat in ((0, w0, s0), (1, w1, s1)):
            for v in win:
                if g.owner[v] == player:
                    assert strat[v] in win and strat[v] in g.succ[v]
                else:
                    assert all(w in win for w in g.succ[v])
            _check_cycles(g, player, win, strat)


def _check_cycles(g, player, win, strat):
    """In the graph restricted by the strategy every cycle has the winner's parity."""
    edges = {v: ([strat[v]] if g.owner[v] == player else list(g.succ[v])) for v in win}
    for v in win:
        # the largest priority on a cycle through v with all priorities <= prio(v)
        p = g.priority[v]
        seen, stack = set(), [w for w in edges[v] if g.priority[w] <= p]
        while stack:
            u = stack.pop()
            if u == v:
                assert p % 2 == player, (v, p)
                break
            if u in seen:
                continue
            seen.add(u)
            stack.extend(w for w in edges[u] if g.priority[w] <= p)


def test_iar_priorities():
    pairs = [(frozenset({0}), frozenset({1})), (frozenset(), frozenset({2}))]
    assert iar_step(pairs, (0, 1), 1) == ((0, 1), 2)
    assert iar_step(pairs, (0, 1), 2) == ((0, 1), 4)
    assert iar_step(pairs, (1, 0), 0) == ((0, 1), 5)
    assert iar_step(pairs, (0, 1), 3) == ((0, 1), 1)


# ------------------------------------------------------------- emptiness


def test_all_accepting_pair_is_nonempty():
    a = RabinTreeAutomaton(2, 1, 0, ALL, [((), (0,))], AB)
    empty, w = rabin_empty(a)
    assert not empty and rabin_member(a, w)


def test_all_rejecting_pair_is_empty():
    a = RabinTreeAutomaton(2, 1, 0, ALL, [((0,), ())], AB)
    assert rabin_empty(a) == (True, None)


def test_settling_automaton():
    a = settle_in()
    empty, w = rabin_empty(a)
    assert not empty and rabin_member(a, w)
    # a tree with the left spine all a's lets state 0 recur forever
    spine = RegularTree(2, ["a", "b"], [[0, 1], [1, 1]], 0)
    assert rabin_member(a, spine)
    looping = RabinTreeAutomaton(2, 1, 0, ALL, [((0,), (0,))], AB)
    assert rabin_empty(looping)[0]


def test_no_transitions_is_empty():
    assert rabin_empty(empty_rabin(2, AB))[0]


@pytest.mark.parametrize("k", [1, 2])
def test_emptiness_agrees_with_buchi_fixpoint(k):
    rng = random.Random(20 + k)
    for _ in range(150):
        a = random_rabin(rng, k=k, max_states=4)
        a = RabinTreeAutomaton(a.k, a.states, 0, a.transitions, [((), a.pairs[0][1])], AB)
        empty, w = rabin_empty(a)
        assert empty == (not buchi_tree_wins(a))
        if not empty:
            assert rabin_member(a, w)


def test_membership_agrees_with_buchi_fixpoint():
    rng = random.Random(5)
    for _ in range(40):
        a = random_rabin(rng, max_states=3, density=0.4)
        a = RabinTreeAutomaton(2, a.states, 0, a.transitions, [((), a.pairs[0][1])], AB)
        for t in TREES[:60]:
            assert rabin_member(a, t) == buchi_tree_wins(a, t)


def test_witnesses_on_multi_pair_corpus():
    rng = random.Random(6)
    nonempty = 0
    for _ in range(120):
        a = random_rabin(rng, max_states=4, pairs=rng.randint(1, 3), density=0.3)
        empty, w = rabin_empty(a)
        if not empty:
            nonempty += 1
            assert rabin_member(a, w)
        else:
            assert not any(rabin_member(a, t) for t in TREES[:40])
    assert nonempty > 10


def test_member_mismatch():
    with pytest.raises(ArityError):
        rabin_member(universal_rabin(2, AB), RegularTree(3, ["a"], [[0, 0, 0]], 0))


def test_game_cap():
    with pytest.raises(ResourceLimit):
        rabin_empty(settle_in(), cap=2)


def test_arena_grows_polynomially():
    # chain of n states with one pair; the arena is linear in n
    sizes = []
    for n in (4, 8, 16, 32):
        trans = [(q, "a", ((q + 1) % n, q)) for q in range(n)]
        a = RabinTreeAutomaton(2, n, 0, trans, [({0}, {n - 1})], AB)
        sizes.append(arena_size(a))
    for small, big in zip(sizes, sizes[1:]):
        assert big <= 2.5 * small


# ---------------------------------------------------- union and projection


def test_union_with_empty():
    a = settle_in()
    u = rabin_union(a, empty_rabin(2, AB))
    for t in TREES[:50]:
        assert rabin_member(u, t) == rabin_member(a, t)


def test_union_keeps_witness():
    rng = random.Random(7)
    for _ in range(30):
        a, b = random_rabin(rng, max_states=3), random_rabin(rng, max_states=3, pairs=2)
        empty, w = rabin_empty(a)
        if not empty:
            assert rabin_member(rabin_union(a, b), w)


def test_union_matches_disjunction():
    rng = random.Random(8)
    for _ in range(25):
        a, b = random_rabin(rng, max_states=3), random_rabin(rng, max_states=3, pairs=2)
        u = rabin_union(a, b)
        for t in TREES[:40]:
            assert rabin_member(u, t) == (rabin_member(a, t) or rabin_member(b, t))


PQ = PropSet(["p", "q"])


def p_and_q_everywhere():
    return RabinTreeAutomaton(2, 1, 0, [(0, Cube({"p", "q"}), (0, 0))], [((), (0,))], PQ)


def test_project_nothing():
    a = p_and_q_everywhere()
    t = RegularTree(2, [frozenset({"p", "q"})], [[0, 0]], 0)
    assert rabin_member(rabin_project(a, set()), t) and rabin_member(a, t)


def test_project_q():
    b = rabin_project(p_and_q_everywhere(), {"q"})
    assert rabin_member(b, RegularTree(2, [frozenset({"p"})], [[0, 0]], 0))
    assert not rabin_member(b, RegularTree(2, [frozenset()], [[0, 0]], 0))


def test_project_matches_vertex_relabeling():
    a = RabinTreeAutomaton(2, 2, 0, [(0, Cube({"p"}, {"q"}), (1, 1)), (1, Cube({"q"}), (0, 0)),
                                     (1, Cube({"q"}), (1, 1))], [((), (0,))], PQ)
    b = rabin_project(a, {"q"})
    letters = [frozenset(), frozenset({"p"})]
    for t in list(all_regular_trees(2, letters, 1)) + list(all_regular_trees(2, letters, 2)):
        relabeled = []
        for bits in range(2 ** len(t.labels)):
            labels = [x | {"q"} if bits >> i & 1 else x for i, x in enumerate(t.labels)]
            relabeled.append(RegularTree(2, labels, t.succ, t.start))
        # a vertex-wise relabeling is one particular relabeling of the unfolding
        if any(rabin_member(a, r) for r in relabeled):
            assert rabin_member(b, t)
    # here every accepted tree alternates p-levels with arbitrary levels
    alternating = RegularTree(2, [frozenset({"p"}), frozenset()], [[1, 1], [0, 0]], 0)
    assert rabin_member(b, alternating)
    assert not rabin_member(b, RegularTree(2, [frozenset()], [[0, 0]], 0))


def test_project_needs_propositions():
    with pytest.raises(CapabilityError):
        rabin_project(universal_rabin(2, AB), {"a"})


# -------------------------------------------------------------- formats


def test_json_round_trip():
    for a in (settle_in(), p_and_q_everywhere()):
        text = rabin_dumps(a)
        assert rabin_dumps(rabin_from_json(text)) == text


def test_dot_export():
    dot = rabin_to_dot(settle_in())
    assert "L0" in dot and "U0" in dot
