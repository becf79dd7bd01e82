"""0/1 knapsack selection of buildings to inspect.

Minimizing the residual expected misprediction cost is solved as the
equivalent maximization of the avoided cost ``sum(v_i * z_i)``. Amounts are
converted to integer cents; weights are rounded *up* and the capacity
*down* to multiples of ``granularity`` so any quantized-feasible selection
is feasible in true dollars.

Tie-break among optimal selections: larger value, then smaller total
weight, then the lexicographically earliest selection (an item with a lower
index is preferred over later ones).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

from .errors import ConfigError, SizeError

__all__ = [
    "DEFAULT_CELL_LIMIT",
    "InspectionSelection",
    "KnapsackInstance",
    "brute_force",
    "solve",
    "solve_many",
]

DEFAULT_CELL_LIMIT = 10**8
BRUTE_FORCE_MAX_ITEMS = 25
_BRUTE_CHUNK_BITS = 20


@dataclass(frozen=True)
class KnapsackInstance:
    """Values, weights and capacity in dollars; ``granularity`` is the weight unit."""

    values: Sequence[float]
    weights: Sequence[float]
    capacity: float
    granularity: float = 0.01

    def __post_init__(self):
        if len(self.values) != len(self.weights):
            raise ValueError("values and weights differ in length")
        if any(not w > 0 for w in self.weights):
            raise ValueError("all weights must be positive")
        if any(not v >= 0 for v in self.values):
            raise ValueError("values must be non-negative")
        if not self.capacity >= 0:
            raise ValueError("capacity must be non-negative")
        if not self.granularity > 0:
            raise ValueError("granularity must be positive")


@dataclass(frozen=True)
class InspectionSelection:
    z: tuple[bool, ...]
    total_weight: float
    total_value: float
    residual_cost: float
    value_cents: int
    residual_cents: int

    @property
    def selected(self) -> list[int]:
        return [i for i, flag in enumerate(self.z) if flag]


def _weight_cents(w: float) -> int:
    # round() first strips binary noise such as 5000.000000000001 * 100
    return math.ceil(round(w * 100, 6))


def _capacity_cents(c: float) -> int:
    return math.floor(round(c * 100, 6))


def _granularity_cents(g: float) -> int:
    cents = round(g * 100)
    if cents < 1 or abs(g * 100 - cents) > 1e-6:
        raise ConfigError(f"granularity must be a positive whole number of cents, got {g!r}")
    return cents


@dataclass
class _Quantized:
    values: np.ndarray   # int64 cents
    weights: np.ndarray  # int64 units
    weight_cents: np.ndarray
    unit_cents: int

    def capacity_units(self, capacity: float) -> int:
        return _capacity_cents(capacity) // self.unit_cents


def _quantize(values, weights, granularity: float) -> _Quantized:
    g = _granularity_cents(granularity)
    v = np.array([int(round(x * 100)) for x in values], dtype=np.int64)
    wc = np.array([_weight_cents(x) for x in weights], dtype=np.int64)
    q = -(-wc // g)
    # Dividing all weights by their gcd leaves the feasible sets unchanged.
    common = int(reduce(math.gcd, q.tolist(), 0)) or 1
    return _Quantized(v, q // common, wc, g * common)


def _selection(z: np.ndarray, q: _Quantized, weights: Sequence[float]) -> InspectionSelection:
    z = np.asarray(z, dtype=bool)
    value = int(q.values[z].sum())
    residual = int(q.values[~z].sum())
    total_weight = math.fsum(w for w, flag in zip(weights, z) if flag)
    return InspectionSelection(tuple(bool(f) for f in z), total_weight, value / 100, residual / 100, value, residual)


def _dp_table(v: np.ndarray, w: np.ndarray, cap: int, cell_limit: int) -> np.ndarray:
    """Suffix DP; ``take[i, c]`` says whether item i is in the best selection of items i.. at capacity c."""
    n = len(v)
    if n * (cap + 1) > cell_limit:
        raise SizeError(
            f"knapsack table needs {n * (cap + 1)} cells (limit {cell_limit}); use a coarser granularity"
        )
    best_v = np.zeros(cap + 1, dtype=np.int64)
    best_w = np.zeros(cap + 1, dtype=np.int64)
    take = np.zeros((n, cap + 1), dtype=bool)
    for i in range(n - 1, -1, -1):
        wi = int(w[i])
        if wi > cap:
            continue
        tv = best_v[: cap + 1 - wi] + v[i]
        tw = best_w[: cap + 1 - wi] + wi
        sv = best_v[wi:]
        sw = best_w[wi:]
        better = (tv > sv) | ((tv == sv) & (tw <= sw))
        take[i, wi:] = better
        best_v = best_v.copy()
        best_w = best_w.copy()
        best_v[wi:] = np.where(better, tv, sv)
        best_w[wi:] = np.where(better, tw, sw)
    return take


def _backtrack(take: np.ndarray, w: np.ndarray, caps: np.ndarray) -> np.ndarray:
    caps = np.array(caps, dtype=np.int64)
    z = np.zeros((len(caps), take.shape[0]), dtype=bool)
    for i in range(take.shape[0]):
        chosen = take[i, caps]
        z[:, i] = chosen
        caps -= chosen * w[i]
    return z


def solve(
    instance: KnapsackInstance, cell_limit: int = DEFAULT_CELL_LIMIT, fill_when_affordable: bool = False
) -> InspectionSelection:
    """Optimal inspection set by dynamic programming over quantized weight.

    With ``fill_when_affordable`` every item is selected whenever the
    capacity covers the total weight, including zero-value items the
    optimization alone would leave out.
    """
    return solve_many(
        instance.values, instance.weights, [instance.capacity], instance.granularity, cell_limit, fill_when_affordable
    )[0]


def solve_many(
    values: Sequence[float],
    weights: Sequence[float],
    capacities: Sequence[float],
    granularity: float = 0.01,
    cell_limit: int = DEFAULT_CELL_LIMIT,
    fill_when_affordable: bool = False,
) -> list[InspectionSelection]:
    """Solve one item set against several capacities with a single DP table.

    Each result is identical to ``solve`` on the corresponding instance.
    """
    KnapsackInstance(values, weights, max(capacities, default=0.0), granularity)
    if any(not c >= 0 for c in capacities):
        raise ValueError("capacity must be non-negative")
    q = _quantize(values, weights, granularity)
    total_units = int(q.weights.sum())
    caps = np.array([min(q.capacity_units(c), total_units) for c in capacities], dtype=np.int64)
    if len(q.values) == 0:
        return [_selection(np.zeros(0, bool), q, weights) for _ in capacities]
    take = _dp_table(q.values, q.weights, int(caps.max(initial=0)), cell_limit)
    picks = _backtrack(take, q.weights, caps)
    if fill_when_affordable:
        total_cents = int(q.weight_cents.sum())
        for row, c in zip(picks, capacities):
            if _capacity_cents(c) >= total_cents:
                row[:] = True
    return [_selection(z, q, weights) for z in picks]


def brute_force(instance: KnapsackInstance) -> InspectionSelection:
    """Exact optimum by enumerating every subset (n <= 25), same tie-break as :func:`solve`."""
    n = len(instance.values)
    if n > BRUTE_FORCE_MAX_ITEMS:
        raise SizeError(f"brute force is limited to {BRUTE_FORCE_MAX_ITEMS} items, got {n}")
    q = _quantize(instance.values, instance.weights, instance.granularity)
    cap = q.capacity_units(instance.capacity)
    if n == 0:
        return _selection(np.zeros(0, bool), q, instance.weights)

    # Subset index bit (n-1-i) is item i, so a larger index is lexicographically earlier.
    n_low = min(n, _BRUTE_CHUNK_BITS)
    n_high = n - n_low
    low_v = np.zeros(1, dtype=np.int64)
    low_w = np.zeros(1, dtype=np.int64)
    for i in range(n - 1, n_high - 1, -1):
        low_v = np.concatenate([low_v, low_v + q.values[i]])
        low_w = np.concatenate([low_w, low_w + q.weights[i]])

    best = None  # (value, -weight, index)
    for high in range(1 << n_high):
        hv = hw = 0
        for j in range(n_high):
            if high >> (n_high - 1 - j) & 1:
                hv += int(q.values[j])
                hw += int(q.weights[j])
        sv = low_v + hv
        sw = low_w + hw
        feasible = sw <= cap
        if not feasible.any():
            continue
        top_v = sv[feasible].max()
        cand = feasible & (sv == top_v)
        top_w = sw[cand].min()
        idx = int(np.flatnonzero(cand & (sw == top_w))[-1])
        key = (int(top_v), -int(top_w), (high << n_low) | idx)
        if best is None or key > best:
            best = key
    index = best[2]
    z = np.array([bool(index >> (n - 1 - i) & 1) for i in range(n)])
    return _selection(z, q, instance.weights)
