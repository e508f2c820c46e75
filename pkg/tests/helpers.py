"""Small hand-built scenarios for unit tests."""

import numpy as np

from nhpt.costs import PhysicalConstants
from nhpt.entities import Household, IncomeGroup, Transformer
from nhpt.network import GasNetwork, PipeEdge
from nhpt.profiles import HOURS, Shape
from nhpt.scenario import Scenario

# kVA drawn per CCF burned in one hour, default constants
KVA_PER_CCF = 103_700 * 0.875 / 2.5 * 0.000293071


def flat(level: float) -> Shape:
    return Shape(explicit=np.full(HOURS, float(level)))


def spike(total: float, hour: int = 0) -> np.ndarray:
    """Hourly gas series with all of ``total`` in one hour."""
    arr = np.zeros(HOURS)
    arr[hour] = total
    return arr


def network(edges, source="s"):
    """``edges``: iterable of (tail, head) or (tail, head, index, length)."""
    out = {}
    for e in edges:
        t, h = e[0], e[1]
        index = e[2] if len(e) > 2 else 0
        length = e[3] if len(e) > 3 else 1.0
        out[(t, h, index)] = PipeEdge(t, h, length, index)
    return GasNetwork(source, out)


def scenario(edges, households=(), transformers=None, median=1000.0, rate=0.0, source="s", **const):
    """Build a scenario.

    ``edges``: (tail, head, index, length, [(hid, service), ...]).
    ``households``: (hid, annual or hourly array, tid, group).
    ``transformers``: tid -> (capacity, constant baseline); default one large unit.
    """
    transformers = transformers or {"t0": (1e6, 0.0)}
    pipes = {}
    for t, h, index, length, attached in edges:
        ids = tuple(a[0] for a in attached)
        serv = tuple(float(a[1]) for a in attached)
        pipes[(t, h, index)] = PipeEdge(t, h, float(length), index, ids, serv,
                                        rate * (length + sum(serv)))
    net = GasNetwork(source, pipes)
    hh = {}
    served = {tid: [] for tid in transformers}
    for hid, usage, tid, group in households:
        if np.ndim(usage):
            hh[hid] = Household.from_hourly(hid, (0.0, 0.0), usage, tid, group)
        else:
            hh[hid] = Household(hid, (0.0, 0.0), float(usage), Shape("winter_peaked", 0), tid,
                                IncomeGroup(group))
        served[tid].append(hid)
    tr = {
        tid: Transformer(tid, cap, flat(1.0), base, tuple(sorted(served[tid])))
        for tid, (cap, base) in transformers.items()
    }
    k = PhysicalConstants(median_annual_gas=median, maintenance_rate=rate, **const)
    return Scenario(net, hh, tr, k)
