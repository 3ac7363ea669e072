"""Small graph helpers: strongly connected components and lasso search."""

from __future__ import annotations

from collections import deque


def explore(starts, succ):
    """Reachable nodes and labeled edges of an implicit graph.

    ``succ(node)`` yields (label, target) pairs.  Returns (order, edges,
    parent) with ``parent[n] = (label, predecessor)`` along a BFS tree.
    """
    parent = {}
    order = []
    edges = {}
    queue = deque()
    for s in starts:
        if s not in parent:
            parent[s] = None
            order.append(s)
            queue.append(s)
    while queue:
        u = queue.popleft()
        out = edges[u] = list(succ(u))
        for label, v in out:
            if v not in parent:
                parent[v] = (label, u)
                order.append(v)
                queue.append(v)
    return order, edges, parent


def sccs(nodes, edges):
    """Tarjan's algorithm without recursion; returns a list of node lists."""
    index = {}
    low = {}
    on_stack = set()
    stack = []
    out = []
    counter = 0
    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(edges.get(root, ())))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for _, w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(edges.get(w, ()))))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                out.append(comp)
    return out


def nontrivial(comp, edges):
    if len(comp) > 1:
        return True
    v = comp[0]
    return any(w == v for _, w in edges.get(v, ()))


def path_to(parent, node):
    """Edge labels along the BFS tree from a start node to ``node``."""
    labels = []
    while parent[node] is not None:
        label, node = parent[node]
        labels.append(label)
    labels.reverse()
    return labels


def cycle_through(node, edges, allowed):
    """Shortest cycle node -> node inside ``allowed`` as (labels, nodes)."""
    prev = {}
    queue = deque()
    for label, w in edges[node]:
        if w in allowed and w not in prev:
            prev[w] = (label, None)
            queue.append(w)
    while queue:
        u = queue.popleft()
        if u == node:
            break
        for label, w in edges[u]:
            if w in allowed and w not in prev:
                prev[w] = (label, u)
                queue.append(w)
    labels, nodes = [], []
    cur = node
    while True:
        label, p = prev[cur]
        labels.append(label)
        nodes.append(cur)
        if p is None:
            break
        cur = p
    labels.reverse()
    nodes.reverse()
    return labels, nodes


def accepting_lasso(starts, succ, is_final):
    """Find a reachable cycle through a final node.

    Returns (stem_labels, loop_labels, stem_nodes, loop_nodes) or None.
    ``stem_nodes`` ends at the first node of the loop.
    """
    order, edges, parent = explore(starts, succ)
    for comp in sccs(order, edges):
        if not nontrivial(comp, edges):
            continue
        finals = [v for v in comp if is_final(v)]
        if not finals:
            continue
        target = min(finals, key=order.index)
        stem = path_to(parent, target)
        stem_nodes = []
        cur = target
        while parent[cur] is not None:
            stem_nodes.append(cur)
            cur = parent[cur][1]
        stem_nodes.append(cur)
        stem_nodes.reverse()
        loop, loop_nodes = cycle_through(target, edges, set(comp))
        return stem, loop, stem_nodes, loop_nodes
    return None


def useful_nodes(order, edges, is_final):
    """Nodes from which a cycle through a final node is reachable."""
    good = set()
    for comp in sccs(order, edges):
        if nontrivial(comp, edges) and any(is_final(v) for v in comp):
            good.update(comp)
    rev = {}
    for u, out in edges.items():
        for _, v in out:
            rev.setdefault(v, []).append(u)
    queue = deque(good)
    while queue:
        v = queue.popleft()
        for u in rev.get(v, ()):
            if u not in good:
                good.add(u)
                queue.append(u)
    return good
