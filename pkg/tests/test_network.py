from collections import deque

import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import network
from nhpt.network import (
    GasNetwork,
    NetworkError,
    PipeEdge,
    UnknownEdgeError,
    cut_sets,
    downstream_component,
    downstream_edges,
    weakly_connected_components,
)


def bfs(nodes, edges, start):
    """Undirected reachability oracle."""
    adj = {n: [] for n in nodes}
    for t, h, _ in edges:
        adj[t].append(h)
        adj[h].append(t)
    seen, q = {start}, deque([start])
    while q:
        for m in adj[q.popleft()]:
            if m not in seen:
                seen.add(m)
                q.append(m)
    return seen


def union_find(nodes, edges):
    parent = {n: n for n in nodes}

    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x

    for t, h, _ in edges:
        parent[find(t)] = find(h)
    groups = {}
    for n in nodes:
        groups.setdefault(find(n), set()).add(n)
    return sorted(map(frozenset, groups.values()), key=sorted)


class TestComponents:
    def test_single_node(self):
        net = GasNetwork("n", {})
        assert weakly_connected_components(net) == [frozenset({"n"})]

    def test_path(self):
        net = network([("s", "a"), ("a", "b")])
        assert weakly_connected_components(net) == [frozenset({"s", "a", "b"})]

    def test_two_components_match_union_find(self):
        edges = {("s", "a", 0): PipeEdge("s", "a", 1.0), ("b", "c", 0): PipeEdge("b", "c", 1.0)}
        net = GasNetwork.unchecked("s", edges, {"s", "a", "b", "c"})
        got = sorted(weakly_connected_components(net), key=sorted)
        assert got == union_find(net.nodes, edges) == [frozenset("as"), frozenset("bc")]

    def test_constructor_rejects_disconnected(self):
        with pytest.raises(NetworkError, match="not weakly connected"):
            GasNetwork("s", {("s", "a", 0): PipeEdge("s", "a", 1.0)}, frozenset({"s", "a", "z"}))

    def test_constructor_rejects_self_loop(self):
        with pytest.raises(NetworkError, match="self-loop"):
            network([("s", "s")])

    def test_edge_rejects_bad_lengths(self):
        with pytest.raises(NetworkError):
            PipeEdge("a", "b", 0.0)
        with pytest.raises(NetworkError):
            PipeEdge("a", "b", 1.0, attached_households=("h",), service_lengths=())


class TestDownstream:
    def test_leaf_of_path(self):
        net = network([("s", "a"), ("a", "b")])
        assert downstream_component(net, ("a", "b", 0)) == {"b"}

    def test_cycle_edge(self):
        net = network([("s", "a"), ("a", "b"), ("b", "s")])
        assert downstream_component(net, ("a", "b", 0)) == frozenset()

    def test_tree_root_edge(self):
        net = network([("s", "a"), ("a", "b"), ("a", "c")])
        assert downstream_component(net, ("s", "a", 0)) == {"a", "b", "c"}
        assert downstream_edges(net, ("s", "a", 0)) == set(net.edges)

    def test_unknown_edge(self):
        net = network([("s", "a")])
        with pytest.raises(UnknownEdgeError):
            downstream_component(net, ("a", "s", 0))

    def test_parallel_edges_are_not_bridges(self):
        net = network([("s", "a", 0), ("s", "a", 1), ("a", "b")])
        sets = cut_sets(net)
        assert sets[("s", "a", 0)] == {("s", "a", 0)}
        assert sets[("s", "a", 1)] == {("s", "a", 1)}
        assert sets[("a", "b", 0)] == {("a", "b", 0)}

    def test_without_edges_keeps_source_and_drops_isolated(self):
        net = network([("s", "a"), ("a", "b")])
        left = net.without_edges([("s", "a", 0), ("a", "b", 0)])
        assert left.nodes == {"s"} and not left.edges
        with pytest.raises(UnknownEdgeError):
            net.without_edges([("x", "y", 0)])


@st.composite
def trees(draw, max_nodes=50):
    n = draw(st.integers(1, max_nodes))
    parents = [draw(st.integers(0, i - 1)) for i in range(1, n)]
    flips = draw(st.lists(st.booleans(), min_size=n - 1, max_size=n - 1))
    edges = []
    for child, (parent, flip) in enumerate(zip(parents, flips), start=1):
        edges.append((child, parent) if flip else (parent, child))
    return n, edges


@st.composite
def connected_graphs(draw, max_nodes=20):
    n, edges = draw(trees(max_nodes))
    extra = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=n))
    edges = edges + [(a, b) for a, b in extra if a != b]
    keyed, count = [], {}
    for t, h in edges:
        i = count.get((t, h), 0)
        count[(t, h)] = i + 1
        keyed.append((t, h, i))
    return n, keyed


@given(trees())
def test_tree_downstream_is_subtree(tree):
    n, edges = tree
    net = network([(t, h) for t, h in edges], source=0)
    parent = {}
    seen, q = {0}, deque([0])
    adj = {i: [] for i in range(n)}
    for t, h in edges:
        adj[t].append(h)
        adj[h].append(t)
    while q:
        u = q.popleft()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                parent[v] = u
                q.append(v)

    def subtree(root):
        out = {root}
        changed = True
        while changed:
            changed = False
            for v, p in parent.items():
                if p in out and v not in out:
                    out.add(v)
                    changed = True
        return out

    for t, h in edges:
        child = h if parent.get(h) == t else t
        assert downstream_component(net, (t, h, 0)) == subtree(child)


@given(connected_graphs())
def test_downstream_empty_iff_on_cycle(graph):
    n, edges = graph
    net = network(edges, source=0)
    assert len(weakly_connected_components(net)) == 1
    sets = cut_sets(net)
    for key in edges:
        rest = [e for e in edges if e != key]
        on_cycle = key[1] in bfs(range(n), rest, key[0])
        comp = downstream_component(net, key)
        assert (not comp) == on_cycle
        expected = {key} | {e for e in edges if e[0] in comp and e[1] in comp}
        assert sets[key] == expected
