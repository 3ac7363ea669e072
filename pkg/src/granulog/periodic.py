"""Eventually periodic sets of naturals and the periodic path problem.

An ``EventuallyPeriodicSet`` is ``E ∪ {x >= k : (x - k) mod d in R}``.
With ``R = {0}`` this is the familiar ``E ∪ {k + j·d}``; several residues
are needed to represent unions of progressions with a common period.
``d = 0`` encodes the finite set ``E``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from math import gcd

from .core import LassoWord, SchemaError, loads


def lcm(a, b):
    if a == 0:
        return b
    if b == 0:
        return a
    return a * b // gcd(a, b)


def _divisors(n):
    return [p for p in range(1, n + 1) if n % p == 0]


@dataclass(frozen=True)
class EventuallyPeriodicSet:
    exceptions: frozenset = frozenset()
    offset: int = 0
    period: int = 0
    residues: frozenset = frozenset({0})

    def __post_init__(self):
        object.__setattr__(self, "exceptions", frozenset(self.exceptions))
        object.__setattr__(self, "residues", frozenset(self.residues))
        if self.offset < 0 or self.period < 0 or any(e < 0 for e in self.exceptions):
            raise ValueError("negative component in eventually periodic set")
        if self.period and any(not 0 <= r < self.period for r in self.residues):
            raise ValueError("residue out of range")

    def __contains__(self, x):
        return eps_member(self, x)

    @property
    def is_finite(self):
        return self.period == 0 or not self.residues

    def threshold(self):
        """A point from which membership is periodic."""
        top = max(self.exceptions, default=-1) + 1
        return max(self.offset, top)

    def members_below(self, bound):
        return [x for x in range(bound) if x in self]

    def __str__(self):
        return eps_text(self)


def eps_member(s: EventuallyPeriodicSet, x: int) -> bool:
    if x in s.exceptions:
        return True
    if s.period == 0 or x < s.offset:
        return False
    return (x - s.offset) % s.period in s.residues


def _canonical(member, threshold, period):
    """Canonical form of the set whose membership is ``member``.

    ``member`` must be periodic with ``period`` on all x >= ``threshold``.
    The result has minimal period, and its offset is the least member
    from which membership is periodic.
    """
    if period == 0:
        elems = frozenset(x for x in range(threshold) if member(x))
        return EventuallyPeriodicSet(elems, max(elems, default=-1) + 1, 0)
    window = [member(threshold + i) for i in range(period)]
    if not any(window):
        elems = frozenset(x for x in range(threshold) if member(x))
        return EventuallyPeriodicSet(elems, max(elems, default=-1) + 1, 0)
    p = next(p for p in _divisors(period)
             if all(window[i] == window[i % p] for i in range(period)))
    t = threshold
    while t > 0 and member(t - 1) == member(t - 1 + p):
        t -= 1
    k = t
    while not member(k):
        k += 1
    exceptions = frozenset(x for x in range(k) if member(x))
    residues = frozenset(r for r in range(p) if member(k + r))
    return EventuallyPeriodicSet(exceptions, k, p, residues)


def eps_normalize(s: EventuallyPeriodicSet) -> EventuallyPeriodicSet:
    return _canonical(lambda x: eps_member(s, x), s.threshold(), s.period)


def eps(exceptions=(), offset=0, period=0, residues=(0,)):
    """Build and normalize a set from raw components."""
    return eps_normalize(EventuallyPeriodicSet(frozenset(exceptions), offset, period,
                                               frozenset(residues)))


NATURALS = EventuallyPeriodicSet(frozenset(), 0, 1)
EMPTY = EventuallyPeriodicSet(frozenset(), 0, 0)


def finite_set(elems):
    return eps(elems)


def progression(start, step):
    """The set {start + j·step : j >= 0}."""
    if step == 0:
        return finite_set([start])
    return eps((), start, step)


def _combine(sets, op):
    sets = list(sets)
    period = reduce(lcm, (s.period for s in sets), 0)
    threshold = max((s.threshold() for s in sets), default=0)
    return _canonical(lambda x: op(eps_member(s, x) for s in sets), threshold, period)


def eps_union(*sets) -> EventuallyPeriodicSet:
    if not sets:
        return EMPTY
    return _combine(sets, any)


def eps_intersection(*sets) -> EventuallyPeriodicSet:
    if not sets:
        return NATURALS
    return _combine(sets, all)


def eps_shift(s, delta):
    """{x + delta : x in s} for delta >= 0."""
    return _canonical(lambda x: x >= delta and eps_member(s, x - delta),
                      s.threshold() + delta, s.period)


def eps_text(s: EventuallyPeriodicSet) -> str:
    """Report form ``E ∪ {k + j·d}``."""
    head = "{" + ", ".join(str(e) for e in sorted(s.exceptions)) + "}"
    if s.is_finite:
        return head
    if s.residues == {0}:
        tail = f"{{{s.offset} + j·{s.period}}}"
    else:
        rs = ", ".join(str(r) for r in sorted(s.residues))
        tail = f"{{{s.offset} + r + j·{s.period} : r ∈ {{{rs}}}}}"
    return f"{head} ∪ {tail}" if s.exceptions else tail


def eps_to_json(s):
    return {"exceptions": sorted(s.exceptions), "offset": s.offset,
            "period": s.period, "residues": sorted(s.residues)}


def eps_from_json(data):
    return eps(data.get("exceptions", []), data.get("offset", 0),
               data.get("period", 0), data.get("residues", [0]))


# ------------------------------------------------------ numerical semigroups


def semigroup_set(weights) -> EventuallyPeriodicSet:
    """The set of all sums Σ x_i·w_i with x_i >= 0."""
    weights = sorted(set(weights))
    if not weights:
        raise ValueError("semigroup_set needs at least one weight")
    if weights[0] < 1:
        raise ValueError("weights must be positive")
    d = reduce(gcd, weights)
    reduced = [w // d for w in weights]
    if reduced[0] == 1:
        return eps((), 0, d)
    # every x >= (min-1)(max-1) is representable once gcd is 1
    bound = (reduced[0] - 1) * (reduced[-1] - 1)
    reach = [False] * (bound + 1)
    reach[0] = True
    for x in range(1, bound + 1):
        reach[x] = any(x >= w and reach[x - w] for w in reduced)

    def member(x):
        if x % d:
            return False
        y = x // d
        return y >= bound or reach[y]

    return _canonical(member, bound * d, d)


def frobenius_bound(weights):
    """(w_r - 1)(w_s - 1) for the two smallest weights."""
    w = sorted(set(weights))
    if len(w) < 2:
        return 0 if w == [1] else None
    return (w[0] - 1) * (w[1] - 1)


def solve_y(s: EventuallyPeriodicSet, a: int, l: int) -> EventuallyPeriodicSet:
    """The set {y >= 0 : a + y·l in s}."""
    if l < 0:
        raise ValueError("l must be nonnegative")
    if l == 0:
        return NATURALS if eps_member(s, a) else EMPTY
    period = 0 if s.is_finite else s.period // gcd(s.period, l)
    start = max(0, -(-(s.threshold() - a) // l))
    return _canonical(lambda y: eps_member(s, a + y * l), start, period)


def eps_contains_ap(s: EventuallyPeriodicSet, a: int, l: int) -> bool:
    """Whether {a + y·l : y >= 0} is a subset of s."""
    if l < 1:
        raise ValueError("l must be positive")
    if s.is_finite:
        return False
    window = lcm(s.period, l)
    limit = max(s.threshold(), a) + window
    return all(eps_member(s, x) for x in range(a, limit, l))


def eps_covers_naturals(sets) -> bool:
    """Whether the union of ``sets`` is all of ℕ.

    Below the largest threshold each number is tested individually; past
    it one window of length lcm(periods) decides the rest.
    """
    sets = list(sets)
    if not sets:
        raise ValueError("eps_covers_naturals needs a nonempty list")
    start = max(s.threshold() for s in sets)
    window = reduce(lcm, (s.period for s in sets if not s.is_finite), 1)
    return all(any(eps_member(s, x) for s in sets) for x in range(start + window))


# ---------------------------------------------------------------- graphs


@dataclass(frozen=True)
class LengthGraph:
    nodes: int
    edges: frozenset
    q1: int
    q2: int

    def __post_init__(self):
        object.__setattr__(self, "edges", frozenset(tuple(e) for e in self.edges))
        for u, v in self.edges:
            if not (0 <= u < self.nodes and 0 <= v < self.nodes):
                raise SchemaError(f"edge ({u},{v}) out of range")
        if not (0 <= self.q1 < self.nodes and 0 <= self.q2 < self.nodes):
            raise SchemaError("q1/q2 out of range")

    def successors(self, u):
        return sorted(v for (x, v) in self.edges if x == u)

    @classmethod
    def from_json(cls, text):
        data = loads(text) if isinstance(text, str) else text
        try:
            return cls(int(data["nodes"]), [tuple(e) for e in data["edges"]],
                       int(data["q1"]), int(data["q2"]))
        except (KeyError, TypeError, ValueError) as e:
            raise SchemaError(f"malformed graph: {e}") from None

    def to_json(self):
        return {"nodes": self.nodes, "edges": [list(e) for e in sorted(self.edges)],
                "q1": self.q1, "q2": self.q2}


def reach_sequence(step, start):
    """Iterate ``step`` from ``start`` until a repeat.

    Returns (sequence, preperiod, period) with sequence[t] the t-th set;
    sequence[preperiod + period] == sequence[preperiod].
    """
    seen = {}
    seq = []
    cur = frozenset(start)
    while cur not in seen:
        seen[cur] = len(seq)
        seq.append(cur)
        cur = frozenset(step(cur))
    pre = seen[cur]
    return seq, pre, len(seq) - pre


def graph_length_set(g: LengthGraph) -> EventuallyPeriodicSet:
    """Exact set of lengths of paths from q1 to q2."""
    succ = {u: g.successors(u) for u in range(g.nodes)}
    seq, pre, per = reach_sequence(lambda r: {v for u in r for v in succ[u]}, {g.q1})

    def member(t):
        if t >= pre:
            t = pre + (t - pre) % per
        return g.q2 in seq[t]

    return _canonical(member, pre, per)


def simple_paths(g: LengthGraph, src, dst):
    succ = {u: g.successors(u) for u in range(g.nodes)}
    out = []

    def walk(path):
        u = path[-1]
        if u == dst:
            out.append(tuple(path))
            return
        for v in succ[u]:
            if v not in path:
                walk(path + [v])

    walk([src])
    return out


def simple_cycles(g: LengthGraph):
    """Simple cycles as node tuples starting from their least node."""
    succ = {u: g.successors(u) for u in range(g.nodes)}
    out = []

    def walk(start, path):
        for v in succ[path[-1]]:
            if v == start:
                out.append(tuple(path))
            elif v > start and v not in path:
                walk(start, path + [v])

    for s in range(g.nodes):
        walk(s, [s])
    return out


def skeleton_classes(g: LengthGraph, transitive=True):
    """Classes of q1→q2 paths sharing the same cycle-free skeleton.

    Each class is (mu, cycle_lengths) where mu is the simple skeleton path
    and cycle_lengths lists the lengths of the simple cycles hinged on it.
    With ``transitive`` a cycle also counts as hinged when it shares a node
    with an already collected cycle.
    """
    cycles = simple_cycles(g)
    classes = []
    for mu in simple_paths(g, g.q1, g.q2):
        touched = set(mu)
        chosen = []
        changed = True
        while changed:
            changed = False
            for c in cycles:
                if c not in chosen and touched & set(c):
                    chosen.append(c)
                    if transitive:
                        touched |= set(c)
                        changed = True
        classes.append((mu, sorted(len(c) for c in chosen)))
    return classes


def class_length_set(mu, cycle_lengths) -> EventuallyPeriodicSet:
    """Predicted lengths |mu| + Σ x_i·w_i of a skeleton class."""
    base = len(mu) - 1
    if not cycle_lengths:
        return finite_set([base])
    return eps_shift(semigroup_set(cycle_lengths), base)


def ppp(g: LengthGraph, a: int, l: int):
    """Periodic path problem: a path of length a + y·l for every y >= 0?

    Returns (holds, witness) where the witness is a lasso word whose y-th
    letter is the index of a skeleton class providing a path of length
    a + y·l.
    """
    exact = graph_length_set(g)
    classes = skeleton_classes(g)
    ys = [solve_y(eps_intersection(class_length_set(mu, ws), exact), a, l)
          for mu, ws in classes]
    if not ys or not eps_covers_naturals(ys):
        return False, None
    start = max(y.threshold() for y in ys)
    window = reduce(lcm, (y.period for y in ys if not y.is_finite), 1)

    def pick(y):
        return next(i for i, s in enumerate(ys) if eps_member(s, y))

    stem = [pick(y) for y in range(start)]
    loop = [pick(y) for y in range(start, start + window)]
    return True, LassoWord(stem, loop)
