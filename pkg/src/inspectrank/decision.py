"""Expected-cost-optimal predetermined safety levels."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["PredeterminedDecision", "decide_all", "expected_costs", "optimal_decision"]


@dataclass(frozen=True)
class PredeterminedDecision:
    building_id: str | None
    d_star: int
    c_star: float
    expected_costs: tuple[float, float, float]


def _as_table(costs) -> np.ndarray:
    table = getattr(costs, "entries", costs)
    table = np.asarray(table, dtype=float)
    if table.shape != (3, 3):
        raise ValueError(f"cost table must be 3x3, got shape {table.shape}")
    return table


def expected_costs(probs, costs) -> tuple[float, float, float]:
    """Expected cost of deciding each level; ``costs[s-1][d-1]`` indexing."""
    p1, p2, p3 = (float(v) for v in probs)
    c = _as_table(costs)
    # Fixed summation order, shared with decide_all.
    return tuple(float(p1 * c[0, d] + p2 * c[1, d] + p3 * c[2, d]) for d in range(3))


def optimal_decision(probs, costs, building_id: str | None = None) -> PredeterminedDecision:
    """Pick the level with the least expected misprediction cost.

    Ties resolve toward the higher (more conservative) safety level.
    """
    e = expected_costs(probs, costs)
    best = 2
    for d in (1, 0):
        if e[d] < e[best]:
            best = d
    return PredeterminedDecision(building_id, best + 1, e[best], e)


def decide_all(probs: np.ndarray, tables: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Batched :func:`optimal_decision`.

    ``probs`` has shape ``(n, 3)`` and ``tables`` shape ``(n, 3, 3)``.
    Returns ``(d_star, c_star, expected)`` with ``d_star`` in 1..3.
    """
    probs = np.asarray(probs, dtype=float)
    tables = np.asarray(tables, dtype=float)
    expected = (
        probs[:, 0:1] * tables[:, 0, :]
        + probs[:, 1:2] * tables[:, 1, :]
        + probs[:, 2:3] * tables[:, 2, :]
    )
    if len(expected) == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0), expected
    # argmin returns the first minimum; scanning columns right-to-left makes that the highest level.
    d_idx = 2 - np.argmin(expected[:, ::-1], axis=1)
    c_star = expected[np.arange(len(expected)), d_idx]
    return d_idx + 1, c_star, expected
