"""Gas distribution graph and the connectivity queries built on it.

Edges are keyed by ``(tail, head, index)``; the index separates parallel
pipes between the same node pair. All connectivity questions use the weak
(undirected) sense.
"""

from __future__ import annotations

from bisect import bisect_left
from collections import defaultdict, deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Hashable, Iterable, Mapping

Node = Hashable
EdgeKey = tuple  # (tail, head, index)


class NetworkError(ValueError):
    """Structural problem with a gas network."""


class UnknownEdgeError(KeyError):
    """An edge key that does not exist in the network."""


@dataclass(frozen=True)
class PipeEdge:
    tail: Node
    head: Node
    length: float
    index: int = 0
    attached_households: tuple = ()
    service_lengths: tuple = ()
    annual_maintenance: float = 0.0

    def __post_init__(self):
        if not self.length > 0:
            raise NetworkError(f"edge {self.key} has non-positive length {self.length}")
        if len(self.attached_households) != len(self.service_lengths):
            raise NetworkError(f"edge {self.key}: one service length per household required")
        if any(s < 0 for s in self.service_lengths):
            raise NetworkError(f"edge {self.key}: negative service length")
        if self.annual_maintenance < 0:
            raise NetworkError(f"edge {self.key}: negative maintenance")

    @property
    def key(self) -> EdgeKey:
        return (self.tail, self.head, self.index)

    @property
    def pipe_length(self) -> float:
        """Main length plus every service line hanging off it."""
        return self.length + sum(self.service_lengths)


@dataclass(frozen=True)
class GasNetwork:
    """Weakly connected directed multigraph rooted at a gate station."""

    source: Node
    edges: Mapping[EdgeKey, PipeEdge]
    nodes: frozenset = field(default=frozenset())
    positions: Mapping[Node, tuple] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        nodes = set(self.nodes) | {self.source}
        for key, e in self.edges.items():
            if key != e.key:
                raise NetworkError(f"edge stored under {key} but keyed {e.key}")
            if e.tail == e.head:
                raise NetworkError(f"self-loop at {e.tail}")
            nodes.add(e.tail)
            nodes.add(e.head)
        object.__setattr__(self, "nodes", frozenset(nodes))
        object.__setattr__(self, "edges", dict(self.edges))
        comps = weakly_connected_components(self)
        if len(comps) != 1:
            raise NetworkError(f"network is not weakly connected ({len(comps)} components)")

    @classmethod
    def unchecked(cls, source, edges, nodes, positions=None) -> "GasNetwork":
        """Build without the connectivity check (callers guarantee it)."""
        net = object.__new__(cls)
        object.__setattr__(net, "source", source)
        object.__setattr__(net, "edges", dict(edges))
        object.__setattr__(net, "nodes", frozenset(nodes))
        object.__setattr__(net, "positions", positions if positions is not None else {})
        return net

    @cached_property
    def incident(self) -> dict:
        """node -> sorted list of (edge key, other endpoint), ignoring direction."""
        inc = defaultdict(list)
        for key in sorted(self.edges, key=_sort_key):
            t, h, _ = key
            inc[t].append((key, h))
            inc[h].append((key, t))
        return dict(inc)

    def sorted_edge_keys(self) -> list:
        return sorted(self.edges, key=_sort_key)

    def degree(self, node) -> int:
        return len(self.incident.get(node, ()))

    def total_pipe_length(self) -> float:
        return sum(self.edges[k].pipe_length for k in self.sorted_edge_keys())

    def without_edges(self, keys: Iterable[EdgeKey]) -> "GasNetwork":
        """Drop ``keys`` and any endpoint left with degree zero (the source stays)."""
        keys = set(keys)
        missing = keys - self.edges.keys()
        if missing:
            raise UnknownEdgeError(sorted(missing, key=_sort_key)[0])
        edges = {k: e for k, e in self.edges.items() if k not in keys}
        touched = {k[0] for k in keys} | {k[1] for k in keys}
        still = {n for k in edges for n in k[:2]}
        nodes = {n for n in self.nodes if n not in touched or n in still or n == self.source}
        return GasNetwork.unchecked(self.source, edges, nodes, self.positions)


def _sort_key(key):
    return tuple((type(x).__name__, x) for x in key)


def edge_sort_key(key):
    """Total order over edge keys with mixed id types."""
    return _sort_key(key)


def weakly_connected_components(network: GasNetwork) -> list[frozenset]:
    """Partition the nodes into weak components, via union-find."""
    parent = {n: n for n in network.nodes}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for t, h, _ in network.edges:
        rt, rh = find(t), find(h)
        if rt != rh:
            parent[rt] = rh
    groups = defaultdict(set)
    for n in network.nodes:
        groups[find(n)].add(n)
    return [frozenset(g) for g in groups.values()]


def _reachable(network: GasNetwork, start, skip: EdgeKey | None = None) -> set:
    seen = {start}
    queue = deque([start])
    inc = network.incident
    while queue:
        n = queue.popleft()
        for key, other in inc.get(n, ()):
            if key != skip and other not in seen:
                seen.add(other)
                queue.append(other)
    return seen


def downstream_component(network: GasNetwork, edge: EdgeKey) -> frozenset:
    """Nodes cut off from the source when ``edge`` alone is removed."""
    if edge not in network.edges:
        raise UnknownEdgeError(edge)
    kept = _reachable(network, network.source, skip=edge)
    return frozenset(n for n in network.nodes if n not in kept)


def downstream_edges(network: GasNetwork, edge: EdgeKey) -> frozenset:
    """``edge`` together with every edge inside its downstream component."""
    cut = downstream_component(network, edge)
    inner = {k for k in network.edges if k[0] in cut and k[1] in cut}
    return frozenset(inner | {edge})


def cut_sets(network: GasNetwork) -> dict:
    """Map every edge to the edge set that must shut down with it.

    One DFS from the source finds the bridges (lowlink over edge keys, so
    parallel pipes are never bridges). A bridge's far side is the DFS subtree
    of its child endpoint; every other edge maps to itself.
    """
    inc = network.incident
    src = network.source
    tin, low, order = {}, {}, []
    parent_edge = {}
    timer = 0
    tin[src] = low[src] = 0
    order.append(src)
    stack = [(src, None, iter(inc.get(src, ())))]
    while stack:
        node, via, it = stack[-1]
        advanced = False
        for key, other in it:
            if key == via:
                continue
            if other in tin:
                low[node] = min(low[node], tin[other])
            else:
                timer += 1
                tin[other] = low[other] = timer
                order.append(other)
                parent_edge[other] = key
                stack.append((other, key, iter(inc.get(other, ()))))
                advanced = True
                break
        if not advanced:
            stack.pop()
            if stack:
                up = stack[-1][0]
                low[up] = min(low[up], low[node])

    # subtree spans in preorder
    size = {n: 1 for n in order}
    for n in reversed(order):
        if n in parent_edge:
            k = parent_edge[n]
            p = k[0] if k[1] == n else k[1]
            size[p] += size[n]
    pos = {n: i for i, n in enumerate(order)}

    # edges ordered by their upper endpoint; a subtree's inner edges are a contiguous run
    upper = sorted(network.edges, key=lambda k: (min(pos[k[0]], pos[k[1]]), _sort_key(k)))
    starts = [min(pos[k[0]], pos[k[1]]) for k in upper]

    result = {}
    for child, key in parent_edge.items():
        if low[child] > tin[_parent(key, child)]:
            lo, hi = pos[child], pos[child] + size[child]
            a, b = bisect_left(starts, lo), bisect_left(starts, hi)
            result[key] = frozenset(upper[a:b]) | {key}
    for key in network.edges:
        if key not in result:
            result[key] = frozenset([key])
    return result


def _parent(key, child):
    return key[0] if key[1] == child else key[1]
