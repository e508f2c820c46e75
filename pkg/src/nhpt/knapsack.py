"""0/1 knapsack by dynamic programming over integer capacities."""

from __future__ import annotations

import numpy as np


def knapsack_dp(values, weights, capacity: int) -> list[int]:
    """Indices of an optimal item subset.

    One value row is swept per item; updating every capacity at once from the
    previous row is the same recurrence as the descending inner loop. A
    ``take`` matrix records decisions for the backtrack.
    """
    if len(values) != len(weights):
        raise ValueError(f"{len(values)} values but {len(weights)} weights")
    capacity = int(capacity)
    if capacity < 0:
        raise ValueError("capacity must be nonnegative")
    n = len(values)
    for i in range(n):
        if int(weights[i]) < 0 or float(values[i]) < 0:
            raise ValueError(f"item {i}: weights and values must be nonnegative")
    if n == 0 or capacity == 0 and not any(int(w) == 0 for w in weights):
        return []
    best = np.zeros(capacity + 1)
    take = np.zeros((n, capacity + 1), dtype=bool)
    for i in range(n):
        w, v = int(weights[i]), float(values[i])
        if w > capacity:
            continue
        cand = best[: capacity + 1 - w] + v
        better = cand > best[w:]
        take[i, w:] = better
        best[w:] = np.where(better, cand, best[w:])
    chosen = []
    c = capacity
    for i in range(n - 1, -1, -1):
        if take[i, c]:
            chosen.append(i)
            c -= int(weights[i])
    return sorted(chosen)


def knapsack_value(values, weights, capacity: int) -> float:
    """Optimal value (sum of chosen values, in index order)."""
    total = 0.0
    for i in knapsack_dp(values, weights, capacity):
        total += float(values[i])
    return total
