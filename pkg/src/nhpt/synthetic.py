"""Seeded synthetic cities: a jittered street grid with households and transformers."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .costs import PhysicalConstants
from .entities import GROUPS, Household, IncomeGroup, Transformer
from .ingest import RoadGraph, Segment, assign_meters, prune_to_shortest_paths
from .profiles import Shape
from .scenario import Scenario, derive_maintenance, median_usage

TRANSFORMER_SIZES = (15.0, 25.0, 37.5, 50.0, 75.0, 100.0, 150.0, 167.0)


@dataclass(frozen=True)
class SyntheticCityParams:
    blocks_x: int = 14
    blocks_y: int = 13
    block_length: float = 100.0
    jitter: float = 0.2
    homes_per_block: dict = field(default_factory=lambda: {"low": 13.21, "medium": 10.89, "high": 9.66})
    usage_scale: dict = field(default_factory=lambda: {"low": 1.0, "medium": 1.2729, "high": 1.4699})
    low_median_usage: float = 700.0
    usage_sigma: float = 0.35
    tracts: int = 9
    setback: dict = field(default_factory=lambda: {"low": (5.0, 15.0), "medium": (10.0, 30.0), "high": (20.0, 45.0)})
    homes_per_transformer: tuple = (2, 8)
    household_peak_kva: float = 2.0
    utilization: dict = field(default_factory=lambda: {"low": (0.7, 1.2), "medium": (0.55, 1.0), "high": (0.4, 0.8)})
    peripheral_affluence: bool = True
    transformer_sizes: tuple = TRANSFORMER_SIZES
    gas_shape_variants: int = 4
    maintenance_rate: float = 25.0
    seed: int = 42

    def __post_init__(self):
        problems = []
        if self.blocks_x < 2 or self.blocks_y < 2:
            problems.append("grid needs at least 2x2 blocks")
        if not self.block_length > 0:
            problems.append("block_length must be positive")
        for g in GROUPS:
            if self.homes_per_block.get(g.value, 0) < 0:
                problems.append(f"homes_per_block[{g.value}] must be >= 0")
            if self.usage_scale.get(g.value, 1.0) <= 0:
                problems.append(f"usage_scale[{g.value}] must be positive")
        if self.usage_sigma < 0 or self.low_median_usage <= 0:
            problems.append("usage parameters must be positive")
        lo, hi = self.homes_per_transformer
        if not 1 <= lo <= hi:
            problems.append("homes_per_transformer must be an ordered positive range")
        for g, (ulo, uhi) in self.utilization.items():
            if not 0 < ulo <= uhi <= 1.25:
                problems.append(f"utilization[{g}] must lie in (0, 1.25]")
        if self.tracts < 1 or not 0 <= self.jitter < 0.5:
            problems.append("tracts >= 1 and 0 <= jitter < 0.5 required")
        if problems:
            raise ValueError("; ".join(problems))

    @classmethod
    def from_dict(cls, d: dict) -> "SyntheticCityParams":
        known = {f.name for f in fields(cls)}
        bad = set(d) - known
        if bad:
            raise ValueError(f"unknown parameter(s): {', '.join(sorted(bad))}")
        d = dict(d)
        for name in ("setback", "utilization"):
            if name in d:
                d[name] = {g: tuple(v) for g, v in d[name].items()}
        for name in ("homes_per_transformer", "transformer_sizes"):
            if name in d:
                d[name] = tuple(d[name])
        return cls(**d)

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(asdict(self), sort_keys=True).encode()).hexdigest()[:16]


def _node(i, j) -> str:
    return f"n{i:03d}_{j:03d}"


def _grid(p: SyntheticCityParams, rng) -> RoadGraph:
    L = p.block_length
    nodes = {}
    for i in range(p.blocks_x + 1):
        for j in range(p.blocks_y + 1):
            dx, dy = rng.uniform(-0.5, 0.5, size=2) * p.jitter * L
            nodes[_node(i, j)] = (i * L + float(dx), j * L + float(dy))
    segs = []
    for i in range(p.blocks_x + 1):
        for j in range(p.blocks_y + 1):
            for a, b in ((i + 1, j), (i, j + 1)):
                if a <= p.blocks_x and b <= p.blocks_y:
                    u, v = _node(i, j), _node(a, b)
                    (x0, y0), (x1, y1) = nodes[u], nodes[v]
                    segs.append(Segment(f"s{len(segs):05d}", u, v, math.hypot(x1 - x0, y1 - y0)))
    return RoadGraph(nodes, segs)


def _tract_groups(p: SyntheticCityParams, rng) -> np.ndarray:
    """Income group index per block, from contiguous nearest-center tracts."""
    centers = rng.uniform(0, 1, size=(p.tracts, 2)) * [p.blocks_x, p.blocks_y]
    labels = np.array([i % len(GROUPS) for i in range(p.tracts)])
    rng.shuffle(labels)
    if p.peripheral_affluence:
        # tracts further from the source (the grid corner) are wealthier
        rank = np.argsort(np.argsort(np.hypot(centers[:, 0], centers[:, 1]), kind="stable"), kind="stable")
        labels = rank * len(GROUPS) // p.tracts
    bx, by = np.meshgrid(np.arange(p.blocks_x) + 0.5, np.arange(p.blocks_y) + 0.5, indexing="ij")
    d = (bx[..., None] - centers[:, 0]) ** 2 + (by[..., None] - centers[:, 1]) ** 2
    return labels[np.argmin(d, axis=-1)]


def _place(corners, side, t, setback):
    """Point ``setback`` metres inside the block from position ``t`` along ``side``."""
    a, b = np.asarray(corners[side]), np.asarray(corners[(side + 1) % 4])
    centroid = np.mean(corners, axis=0)
    base = a + t * (b - a)
    d = b - a
    normal = np.array([-d[1], d[0]]) / np.hypot(*d)
    if np.dot(centroid - base, normal) < 0:
        normal = -normal
    return base + setback * normal


def generate_synthetic_city(params: SyntheticCityParams | None = None, seed: int | None = None) -> Scenario:
    """Build a deterministic scenario from ``params`` (``seed`` overrides ``params.seed``)."""
    p = params or SyntheticCityParams()
    if seed is not None:
        p = SyntheticCityParams(**{**{f.name: getattr(p, f.name) for f in fields(p)}, "seed": seed})
    rng = np.random.default_rng(p.seed)
    road = _grid(p, rng)
    network = prune_to_shortest_paths(road, _node(0, 0))
    block_group = _tract_groups(p, rng)

    # households, block by block in snake order so transformer runs stay local
    placed = []  # (block_index, angle, hid, location, group)
    counter = 0
    block_order = []
    for i in range(p.blocks_x):
        cols = range(p.blocks_y) if i % 2 == 0 else range(p.blocks_y - 1, -1, -1)
        block_order.extend((i, j) for j in cols)
    for bi, (i, j) in enumerate(block_order):
        group = GROUPS[block_group[i, j]]
        corners = [road.nodes[_node(i, j)], road.nodes[_node(i + 1, j)],
                   road.nodes[_node(i + 1, j + 1)], road.nodes[_node(i, j + 1)]]
        centroid = np.mean(corners, axis=0)
        count = rng.poisson(p.homes_per_block.get(group.value, 0.0))
        for _ in range(count):
            side = int(rng.integers(4))
            t = rng.uniform(0.1, 0.9)
            setback = rng.uniform(*p.setback.get(group.value, (5.0, 25.0)))
            loc = _place(corners, side, t, setback)
            angle = math.atan2(loc[1] - centroid[1], loc[0] - centroid[0])
            placed.append((bi, angle, f"h{counter:05d}", (float(loc[0]), float(loc[1])), group))
            counter += 1
    placed.sort(key=lambda r: (r[0], r[1], r[2]))

    usage = {}
    shapes = {}
    for _, _, hid, _, group in placed:
        median = p.low_median_usage * p.usage_scale.get(group.value, 1.0)
        usage[hid] = float(median * math.exp(p.usage_sigma * rng.standard_normal()))
        shapes[hid] = Shape("winter_peaked", int(rng.integers(p.gas_shape_variants)))

    # transformers over consecutive runs of households
    lo, hi = p.homes_per_transformer
    runs, idx = [], 0
    while idx < len(placed):
        size = int(rng.integers(lo, hi + 1))
        runs.append(placed[idx: idx + size])
        idx += size
    if len(runs) > 1 and len(runs[-1]) < lo:
        tail = runs.pop()
        runs[-1] = runs[-1] + tail
        if len(runs[-1]) > hi:
            merged = runs.pop()
            cut = len(merged) - lo
            runs.extend([merged[:cut], merged[cut:]])

    transformers, owner = {}, {}
    for n, run in enumerate(runs):
        tid = f"t{n:04d}"
        served = tuple(sorted(r[2] for r in run))
        # bigger homes draw more electricity too: scale by relative gas usage
        size = sum(usage[r[2]] for r in run) / p.low_median_usage
        peak = size * p.household_peak_kva * float(rng.uniform(0.8, 1.2))
        groups = [r[4] for r in run]
        run_group = max(GROUPS, key=lambda g: (groups.count(g), -g.rank))
        util = float(rng.uniform(*p.utilization.get(run_group.value, (0.55, 1.2))))
        cap = next((s for s in p.transformer_sizes if s * util >= peak), None)
        if cap is None:
            cap = p.transformer_sizes[-1]
            peak = min(peak, cap * util)
        transformers[tid] = Transformer(tid, cap, Shape("residential_electric", int(rng.integers(4))),
                                        peak, served)
        for hid in served:
            owner[hid] = tid

    households = {}
    for _, _, hid, loc, group in placed:
        households[hid] = Household(hid, loc, usage[hid], shapes[hid], owner[hid], group)

    if households:
        network = assign_meters(network, households.values())
    constants = PhysicalConstants(
        median_annual_gas=median_usage(households.values()) or 1.0,
        maintenance_rate=p.maintenance_rate,
    )
    network = derive_maintenance(network, constants.maintenance_rate)
    provenance = f"synthetic seed={p.seed} params={p.digest()}"
    return Scenario(network, households, transformers, constants, provenance=provenance)
