"""From a road graph to a gas network: shortest-path pruning and meter assignment."""

from __future__ import annotations

import csv
import heapq
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .network import GasNetwork, NetworkError, PipeEdge

DEFAULT_EXCLUDED_CLASSES = ("motorway",)
_REL_TOL = 1e-9


class RoadGraphError(ValueError):
    pass


@dataclass(frozen=True)
class Segment:
    id: str
    a: str
    b: str
    length: float
    road_class: str = "residential"


@dataclass
class RoadGraph:
    nodes: dict = field(default_factory=dict)  # id -> (x, y)
    segments: list = field(default_factory=list)

    def __post_init__(self):
        for nid, (x, y) in self.nodes.items():
            if not (math.isfinite(x) and math.isfinite(y)):
                raise RoadGraphError(f"node {nid}: non-finite coordinates")
        for s in self.segments:
            if not s.length > 0:
                raise RoadGraphError(f"segment {s.id}: length must be positive")
            if s.a not in self.nodes or s.b not in self.nodes:
                raise RoadGraphError(f"segment {s.id}: unknown endpoint")

    @classmethod
    def from_network(cls, network: GasNetwork) -> "RoadGraph":
        nodes = {n: tuple(network.positions.get(n, (0.0, 0.0))) for n in network.nodes}
        segs = [
            Segment(f"s{i}", k[0], k[1], network.edges[k].length)
            for i, k in enumerate(network.sorted_edge_keys())
        ]
        return cls(nodes, segs)


def read_road_graph(nodes_path, segments_path) -> RoadGraph:
    """Read ``id,x,y`` and ``id,a,b,length,class`` delimited files (header rows required)."""
    nodes = {}
    with open(nodes_path, newline="") as fh:
        for lineno, row in enumerate(csv.DictReader(fh), start=2):
            try:
                nodes[row["id"]] = (float(row["x"]), float(row["y"]))
            except (KeyError, TypeError, ValueError) as exc:
                raise RoadGraphError(f"{nodes_path}:{lineno}: bad node row ({exc})") from None
    segments = []
    with open(segments_path, newline="") as fh:
        for lineno, row in enumerate(csv.DictReader(fh), start=2):
            try:
                segments.append(Segment(row["id"], row["a"], row["b"], float(row["length"]),
                                        row.get("class") or "residential"))
            except (KeyError, TypeError, ValueError) as exc:
                raise RoadGraphError(f"{segments_path}:{lineno}: bad segment row ({exc})") from None
    return RoadGraph(nodes, segments)


def write_road_graph(road: RoadGraph, nodes_path, segments_path) -> None:
    with open(nodes_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "x", "y"])
        for nid in sorted(road.nodes):
            x, y = road.nodes[nid]
            w.writerow([nid, repr(float(x)), repr(float(y))])
    with open(segments_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "a", "b", "length", "class"])
        for s in road.segments:
            w.writerow([s.id, s.a, s.b, repr(float(s.length)), s.road_class])


def shortest_distances(road: RoadGraph, source, segments=None) -> dict:
    """Dijkstra over the undirected road graph, edge weight = segment length."""
    adj = {}
    for s in road.segments if segments is None else segments:
        adj.setdefault(s.a, []).append((s.b, s.length))
        adj.setdefault(s.b, []).append((s.a, s.length))
    dist = {source: 0.0}
    heap = [(0.0, str(source), source)]
    done = set()
    while heap:
        d, _, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        for v, w in adj.get(u, ()):
            nd = d + w
            if nd < dist.get(v, math.inf):
                dist[v] = nd
                heapq.heappush(heap, (nd, str(v), v))
    return dist


def on_shortest_path(du: float, length: float, dv: float) -> bool:
    return math.isclose(du + length, dv, rel_tol=_REL_TOL, abs_tol=0.0)


def prune_to_shortest_paths(road: RoadGraph, source, exclude_classes=DEFAULT_EXCLUDED_CLASSES) -> GasNetwork:
    """Keep only segments on some shortest path from ``source``, directed away from it.

    Segments of an excluded road class are dropped first; nodes the source
    can no longer reach are deleted.
    """
    if source not in road.nodes:
        raise RoadGraphError(f"source {source!r} is not a road node")
    excluded = set(exclude_classes or ())
    segs = [s for s in road.segments if s.road_class not in excluded]
    dist = shortest_distances(road, source, segs)
    edges = {}
    for s in sorted(segs, key=lambda s: s.id):
        if s.a not in dist or s.b not in dist:
            continue
        if on_shortest_path(dist[s.a], s.length, dist[s.b]):
            tail, head = s.a, s.b
        elif on_shortest_path(dist[s.b], s.length, dist[s.a]):
            tail, head = s.b, s.a
        else:
            continue
        index = 0
        while (tail, head, index) in edges:
            index += 1
        edges[(tail, head, index)] = PipeEdge(tail, head, s.length, index)
    nodes = {source} | {n for k in edges for n in k[:2]}
    positions = {n: tuple(road.nodes[n]) for n in nodes}
    return GasNetwork(source, edges, frozenset(nodes), positions)


def _segment_distances(points: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Point-to-segment distances, shape (points, segments)."""
    ab = b - a
    denom = np.einsum("ij,ij->i", ab, ab)
    ap = points[:, None, :] - a[None, :, :]
    t = np.einsum("pij,ij->pi", ap, ab) / denom[None, :]
    t = np.clip(t, 0.0, 1.0)
    closest = a[None, :, :] + t[:, :, None] * ab[None, :, :]
    diff = points[:, None, :] - closest
    return np.sqrt(np.einsum("pij,pij->pi", diff, diff))


def assign_meters(network: GasNetwork, households, chunk: int = 512) -> GasNetwork:
    """Attach each household to its nearest pipe (ties go to the smallest edge key).

    ``households`` is an iterable of objects with ``id`` and ``location``, or
    a mapping of id to (x, y). The point-to-pipe distance becomes the
    household's service length.
    """
    if not network.edges:
        raise NetworkError("cannot assign meters to a network without edges")
    if hasattr(households, "items"):
        locs = {hid: tuple(xy) for hid, xy in households.items()}
    else:
        locs = {h.id: tuple(h.location) for h in households}
    keys = network.sorted_edge_keys()
    pos = network.positions
    try:
        a = np.array([pos[k[0]] for k in keys], dtype=float)
        b = np.array([pos[k[1]] for k in keys], dtype=float)
    except KeyError as exc:
        raise NetworkError(f"node {exc.args[0]!r} has no coordinates") from None
    ids = sorted(locs)
    attached = {k: [] for k in keys}
    for start in range(0, len(ids), chunk):
        part = ids[start:start + chunk]
        pts = np.array([locs[h] for h in part], dtype=float)
        d = _segment_distances(pts, a, b)
        best = np.argmin(d, axis=1)
        for hid, j, row in zip(part, best, d):
            attached[keys[j]].append((hid, float(row[j])))
    edges = {}
    for k in keys:
        e = network.edges[k]
        pairs = sorted(list(zip(e.attached_households, e.service_lengths)) + attached[k])
        edges[k] = replace(e, attached_households=tuple(p[0] for p in pairs),
                           service_lengths=tuple(p[1] for p in pairs))
    return GasNetwork.unchecked(network.source, edges, network.nodes, network.positions)

