"""Parity games solved with Zielonka's recursive algorithm.

Player 0 wins a play when the largest priority occurring infinitely often
is even.  Every vertex must have a successor.
"""

from __future__ import annotations

from collections import deque


class ParityGame:
    def __init__(self):
        self.owner = {}
        self.priority = {}
        self.succ = {}
        self.pred = {}

    def add_vertex(self, v, owner, priority):
        self.owner[v] = owner
        self.priority[v] = priority
        self.succ.setdefault(v, [])
        self.pred.setdefault(v, [])

    def add_edge(self, u, v):
        self.succ[u].append(v)
        self.pred.setdefault(v, []).append(u)

    def __len__(self):
        return len(self.owner)

    def check_total(self):
        dead = [v for v, out in self.succ.items() if not out]
        if dead:
            raise ValueError(f"vertex without successor: {dead[0]!r}")


def attractor(game, player, target, inside):
    """Vertices of ``inside`` from which ``player`` can force a visit to ``target``.

    Returns (region, strategy) where the strategy picks, for each vertex of
    ``player`` added to the region, an edge leading closer to ``target``.
    """
    region = set(target)
    strategy = {}
    count = {}
    queue = deque(region)
    while queue:
        v = queue.popleft()
        for u in game.pred.get(v, ()):
            if u not in inside or u in region:
                continue
            if game.owner[u] == player:
                region.add(u)
                strategy[u] = v
                queue.append(u)
            else:
                if u not in count:
                    count[u] = sum(1 for w in game.succ[u] if w in inside)
                count[u] -= 1
                if count[u] == 0:
                    region.add(u)
                    queue.append(u)
    return region, strategy


def _solve(game, vertices):
    """Winning regions and positional strategies on the subgame ``vertices``."""
    win = (set(), set())
    strat = ({}, {})
    current = set(vertices)
    while current:
        top = max(game.priority[v] for v in current)
        me = top % 2
        other = 1 - me
        tops = {v for v in current if game.priority[v] == top}
        region, reach = attractor(game, me, tops, current)
        sub_win, sub_strat = _solve(game, current - region)
        if not sub_win[other]:
            win[me].update(current)
            strat[me].update(sub_strat[me])
            strat[me].update(reach)
            for v in tops:
                if game.owner[v] == me:
                    strat[me][v] = next(w for w in game.succ[v] if w in current)
            strat[other].update(sub_strat[other])
            return win, strat
        lost, reach_other = attractor(game, other, sub_win[other], current)
        win[other].update(lost)
        strat[other].update({v: w for v, w in sub_strat[other].items() if v in sub_win[other]})
        strat[other].update(reach_other)
        current -= lost
    return win, strat


def solve(game: ParityGame):
    """Return (winning regions, strategies), each a pair indexed by player."""
    game.check_total()
    return _solve(game, set(game.owner))
