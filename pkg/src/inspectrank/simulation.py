"""Monte Carlo estimation of the budget / cost trade-off.

For every budget level the engine samples events ``(t, x, states)``, solves
the inspection knapsack for that event and records the discounted total
cost::

    C = exp(gamma t) * sum_i [w_i z_i + c_i(d_i*(x), s_i) (1 - z_i)]
    discounted = exp(-beta t) * C

Random streams are derived from ``(seed, sample)`` (common random numbers)
or ``(seed, sample, budget)`` (independent sampling), so results do not
depend on how work is split across threads.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .costmodel import CostConfig, cost_tensor, inspection_cost_vector
from .decision import decide_all
from .errors import ConfigError
from .fragility import state_probability_matrix
from .knapsack import DEFAULT_CELL_LIMIT, InspectionSelection, KnapsackInstance, solve, solve_many

logger = logging.getLogger(__name__)

__all__ = [
    "BudgetChoice",
    "BudgetSweep",
    "Community",
    "EventAssessment",
    "EventSample",
    "HazardModel",
    "mean_std",
    "Rates",
    "assess_event",
    "budget_grid",
    "budget_sweep",
    "cost_cdf",
    "pareto_front",
    "realized_cost",
    "sample_event",
    "scenario_report",
    "select_budgets",
    "worker_count",
]

THREADS_ENV = "INSPECTRANK_THREADS"


@dataclass(frozen=True)
class HazardModel:
    """``ln X ~ Normal(ln_x_mean, ln_x_std**2)``; ``T ~ Exponential(mean=occurrence_mean)`` years.

    ``fixed_time`` / ``fixed_intensity`` pin ``t`` / ``x`` for scenario and
    estimator studies; the corresponding draws are still consumed so the
    building-state stream is unchanged.
    """

    ln_x_mean: float = -0.8
    ln_x_std: float = 0.3
    occurrence_mean: float = 300.0
    fixed_time: float | None = None
    fixed_intensity: float | None = None

    def __post_init__(self):
        if not self.ln_x_std > 0:
            raise ConfigError("ln_x_std must be > 0")
        if not self.occurrence_mean > 0:
            raise ConfigError("occurrence_mean must be > 0")
        if self.fixed_time is not None and not self.fixed_time >= 0:
            raise ConfigError("fixed_time must be >= 0")
        if self.fixed_intensity is not None and not self.fixed_intensity > 0:
            raise ConfigError("fixed_intensity must be > 0")


@dataclass(frozen=True)
class Rates:
    """Continuously compounded yearly rates: return ``alpha``, inflation ``gamma``, discount ``beta``."""

    alpha: float = 0.03
    gamma: float = 0.03
    beta: float = 0.03

    def __post_init__(self):
        if not self.alpha >= 0:
            raise ConfigError("alpha must be >= 0")
        if not (self.gamma > 0 and self.beta > 0):
            raise ConfigError("gamma and beta must be > 0")

    def capacity_factor(self, t: float) -> float:
        """Budget growth relative to inspection-cost growth, ``exp((alpha - gamma) t)``."""
        return math.exp((self.alpha - self.gamma) * t)

    def cost_factor(self, t: float) -> float:
        """``exp(gamma t) * exp(-beta t)`` folded into one exponent."""
        return math.exp((self.gamma - self.beta) * t)


@dataclass(frozen=True)
class EventSample:
    t: float
    x: float
    states: np.ndarray  # safety level 1..3 per building


class Community:
    """Inventory and cost configuration flattened into arrays.

    Decisions depend on an event only through its intensity, so they are
    cached per intensity value.
    """

    def __init__(self, buildings: Sequence, costs: CostConfig | None = None):
        self.buildings = list(buildings)
        self.costs = costs or CostConfig()
        self.ids = [b.id for b in self.buildings]
        self.mu0 = np.array([b.curve0.mu for b in self.buildings], dtype=float)
        self.sigma0 = np.array([b.curve0.sigma for b in self.buildings], dtype=float)
        self.mu1 = np.array([b.curve1.mu for b in self.buildings], dtype=float)
        self.sigma1 = np.array([b.curve1.sigma for b in self.buildings], dtype=float)
        self.tables = cost_tensor(self.costs, self.buildings)  # cents, [n, s-1, d-1]
        self.w_cents = inspection_cost_vector(self.costs, self.buildings)
        self.w_dollars = [int(c) / 100 for c in self.w_cents]
        self._cache: dict[float, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}

    def __len__(self) -> int:
        return len(self.buildings)

    @property
    def full_budget(self) -> float:
        """Dollars needed to inspect every building."""
        return int(self.w_cents.sum()) / 100

    def probabilities(self, x: float) -> np.ndarray:
        return state_probability_matrix(self.mu0, self.sigma0, self.mu1, self.sigma1, x)

    def decide(self, x: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """``(probs, d_star, c_star_cents)`` at intensity ``x``."""
        hit = self._cache.get(x)
        if hit is None:
            probs = self.probabilities(x)
            d_star, c_star, _ = decide_all(probs, self.tables)
            hit = (probs, d_star, c_star)
            if len(self._cache) < 4096:
                self._cache[x] = hit
        return hit


def worker_count(threads: int | None = None) -> int:
    if threads is None:
        env = os.environ.get(THREADS_ENV)
        threads = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(threads))


def _stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed) % 2**128, spawn_key=key))


def sample_event(hazard: HazardModel, community: Community, rng: np.random.Generator) -> EventSample:
    """Draw occurrence time, intensity and every building's state (inverse CDF)."""
    t = float(rng.exponential(hazard.occurrence_mean))
    x = math.exp(hazard.ln_x_mean + hazard.ln_x_std * float(rng.standard_normal()))
    if hazard.fixed_time is not None:
        t = float(hazard.fixed_time)
    if hazard.fixed_intensity is not None:
        x = float(hazard.fixed_intensity)
    u = rng.random(len(community))
    probs = community.decide(x)[0]
    states = 1 + (u >= probs[:, 0]).astype(np.int8) + (u >= probs[:, 0] + probs[:, 1]).astype(np.int8)
    return EventSample(t, x, states)


def _cost_cents(community: Community, z: np.ndarray, d_star: np.ndarray, states: np.ndarray) -> tuple[int, int]:
    z = np.asarray(z, dtype=bool)
    idx = np.arange(len(community))
    mis = community.tables[idx, states - 1, d_star - 1]
    return int(community.w_cents[z].sum()), int(mis[~z].sum())


def realized_cost(
    sample: EventSample,
    selection: InspectionSelection,
    d_star: Sequence[int],
    community: Community,
    rates: Rates,
) -> float:
    """Discounted total cost of one event, dollars.

    ``d_star`` may be the integer levels or ``PredeterminedDecision`` objects.
    """
    d = np.array([getattr(v, "d_star", v) for v in d_star], dtype=np.int64)
    inspected, mispredicted = _cost_cents(community, np.array(selection.z, dtype=bool), d, np.asarray(sample.states))
    return rates.cost_factor(sample.t) * (inspected + mispredicted) / 100


def knapsack_for_event(community: Community, c_star_cents, t: float, budget: float, rates: Rates, granularity: float) -> KnapsackInstance:
    # The budget constraint is divided through by exp(gamma t): weights stay in
    # time-0 dollars and only the capacity carries exp((alpha - gamma) t).
    return KnapsackInstance(
        values=[float(c) / 100 for c in c_star_cents],
        weights=community.w_dollars,
        capacity=budget * rates.capacity_factor(t),
        granularity=granularity,
    )


@dataclass
class EventAssessment:
    x: float
    t: float
    budget: float
    probs: np.ndarray
    d_star: np.ndarray
    c_star: np.ndarray  # dollars
    selection: InspectionSelection


def assess_event(
    community: Community,
    x: float,
    t: float,
    budget: float,
    rates: Rates,
    granularity: float = 0.01,
    solver: Callable[[KnapsackInstance], InspectionSelection] | None = None,
) -> EventAssessment:
    """Decisions and inspection selection for a known event ``(t, x)`` and budget.

    A budget covering every inspection inspects every building.
    """
    probs, d_star, c_cents = community.decide(x)
    instance = knapsack_for_event(community, c_cents, t, budget, rates, granularity)
    if solver is None:
        selection = solve(instance, fill_when_affordable=True)
    else:
        selection = solver(instance)
    return EventAssessment(x, t, budget, probs, d_star, c_cents / 100, selection)


# ---------------------------------------------------------------------------
# Budget sweep
# ---------------------------------------------------------------------------


def budget_grid(full_budget: float, levels: int = 41) -> np.ndarray:
    """``levels`` evenly spaced budgets from 0 to ``full_budget`` inclusive."""
    if levels < 2:
        raise ConfigError("a budget grid needs at least 2 levels")
    grid = np.linspace(0.0, full_budget, levels)
    grid[-1] = full_budget
    return grid


@dataclass
class BudgetSweep:
    budgets: np.ndarray
    costs: np.ndarray  # [budget, sample] discounted dollars
    t: np.ndarray
    x: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    pareto: np.ndarray
    crn: bool = True

    @property
    def samples(self) -> int:
        return self.costs.shape[1]

    @property
    def ratio(self) -> np.ndarray:
        """Mean over standard deviation per budget (``inf`` where the std is zero)."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.std > 0, self.mean / np.where(self.std > 0, self.std, 1.0), np.inf)


def mean_std(values) -> tuple[float, float]:
    """Sample mean and unbiased (1/(M-1)) standard deviation, compensated sums."""
    vals = [float(v) for v in values]
    m = len(vals)
    if m < 2:
        raise ValueError("mean_std needs at least 2 values")
    mean = math.fsum(vals) / m
    var = math.fsum((v - mean) ** 2 for v in vals) / (m - 1)
    return mean, math.sqrt(var)


def budget_sweep(
    community: Community,
    hazard: HazardModel,
    rates: Rates,
    budgets: Sequence[float],
    samples: int,
    seed: int,
    crn: bool = True,
    granularity: float = 0.01,
    threads: int | None = None,
    cell_limit: int = DEFAULT_CELL_LIMIT,
) -> BudgetSweep:
    """Monte Carlo mean and standard deviation of the discounted cost per budget.

    Raises
    ------
    ConfigError
        Budgets not strictly increasing from zero, or fewer than 2 samples.
    SizeError
        Propagated from the knapsack solver.
    """
    budgets = np.asarray(budgets, dtype=float)
    if budgets.ndim != 1 or len(budgets) == 0:
        raise ConfigError("budgets must be a non-empty vector")
    if budgets[0] != 0 or (np.diff(budgets) <= 0).any():
        raise ConfigError("budgets must start at 0 and increase strictly")
    if samples < 2:
        raise ConfigError("at least 2 samples per budget are required")

    k_count = len(budgets)
    costs = np.zeros((k_count, samples))
    ts = np.zeros((k_count, samples))
    xs = np.zeros((k_count, samples))

    def run_shared(m: int) -> None:
        ev = sample_event(hazard, community, _stream(seed, m))
        _, d_star, c_cents = community.decide(ev.x)
        factor = rates.capacity_factor(ev.t)
        sels = solve_many(
            [float(c) / 100 for c in c_cents], community.w_dollars,
            [float(r) * factor for r in budgets], granularity, cell_limit, fill_when_affordable=True,
        )
        cf = rates.cost_factor(ev.t)
        for k, sel in enumerate(sels):
            inspected, mispredicted = _cost_cents(community, np.array(sel.z, dtype=bool), d_star, ev.states)
            costs[k, m] = cf * (inspected + mispredicted) / 100
        ts[:, m] = ev.t
        xs[:, m] = ev.x

    def run_independent(m: int) -> None:
        for k, r in enumerate(budgets):
            ev = sample_event(hazard, community, _stream(seed, m, k))
            _, d_star, c_cents = community.decide(ev.x)
            sel = solve(
                knapsack_for_event(community, c_cents, ev.t, float(r), rates, granularity),
                cell_limit, fill_when_affordable=True,
            )
            costs[k, m] = realized_cost(ev, sel, d_star, community, rates)
            ts[k, m] = ev.t
            xs[k, m] = ev.x

    task = run_shared if crn else run_independent
    workers = min(worker_count(threads), samples)
    if workers == 1:
        for m in range(samples):
            task(m)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(task, range(samples)))

    stats = [mean_std(costs[k]) for k in range(k_count)]
    mean = np.array([s[0] for s in stats])
    std = np.array([s[1] for s in stats])
    return BudgetSweep(budgets, costs, ts, xs, mean, std, pareto_front(list(zip(mean, std))), crn)


def pareto_front(points: Sequence[tuple[float, float]]) -> np.ndarray:
    """Flags of the non-dominated ``(mean, std)`` points (both minimized).

    A point is dominated when another has mean <= and std <= with at least
    one strict inequality; identical points are all kept.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    flags = np.zeros(len(pts), dtype=bool)
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    best_std = math.inf
    i = 0
    while i < len(order):
        j = i
        mean = pts[order[i], 0]
        while j < len(order) and pts[order[j], 0] == mean:
            j += 1
        group = order[i:j]
        s_min = pts[group[0], 1]
        if s_min < best_std:
            flags[group[pts[group, 1] == s_min]] = True
            best_std = s_min
        i = j
    return flags


@dataclass(frozen=True)
class BudgetChoice:
    unprepared: float
    risk_neutral: float
    risk_averse: float
    min_variance: float
    extremely_risk_averse: float
    cap: float
    ratio: tuple[float, ...] = field(default=())

    def communities(self) -> dict[str, float]:
        return {
            "unprepared": self.unprepared,
            "risk_neutral": self.risk_neutral,
            "risk_averse": self.risk_averse,
            "extremely_risk_averse": self.extremely_risk_averse,
        }


DEFAULT_CAP_FRACTION = 0.75


def _argmin(values: np.ndarray, candidates: np.ndarray, tiebreak: np.ndarray) -> int:
    idx = np.flatnonzero(candidates)
    order = np.lexsort((idx, tiebreak[idx], values[idx]))
    return int(idx[order[0]])


def select_budgets(sweep: BudgetSweep, cap: float | None = None) -> BudgetChoice:
    """Named budgets of the sweep.

    ``risk_neutral`` minimizes the mean; ``min_variance`` minimizes the
    standard deviation (ties: lower mean, then smaller budget);
    ``risk_averse`` is the minimum-mean Pareto budget not above ``cap``
    (default: 75 % of the full budget); ``extremely_risk_averse`` is the
    full-inspection budget.
    """
    budgets = sweep.budgets
    if cap is None:
        cap = DEFAULT_CAP_FRACTION * float(budgets[-1])
    if cap < budgets[0]:
        raise ConfigError(f"budget cap {cap} is below the smallest budget {budgets[0]}")
    everything = np.ones(len(budgets), dtype=bool)
    neutral = _argmin(sweep.mean, everything, budgets)
    min_var = _argmin(sweep.std, everything, sweep.mean)
    allowed = budgets <= cap
    candidates = allowed & sweep.pareto
    if not candidates.any():
        logger.warning("no Pareto-efficient budget under the cap %s; using all budgets under it", cap)
        candidates = allowed
    averse = _argmin(sweep.mean, candidates, budgets)
    return BudgetChoice(
        unprepared=float(budgets[0]),
        risk_neutral=float(budgets[neutral]),
        risk_averse=float(budgets[averse]),
        min_variance=float(budgets[min_var]),
        extremely_risk_averse=float(budgets[-1]),
        cap=float(cap),
        ratio=tuple(float(r) for r in sweep.ratio),
    )


def cost_cdf(samples: Sequence[float]) -> list[tuple[float, float]]:
    """Empirical non-exceedance curve as ``(cost, P[C <= cost])`` steps."""
    vals = np.sort(np.asarray(samples, dtype=float))
    if len(vals) == 0:
        raise ValueError("cost_cdf needs at least one sample")
    m = len(vals)
    rows = []
    for k, v in enumerate(vals.tolist(), start=1):
        if rows and rows[-1][0] == v:
            rows[-1] = (v, k / m)
        else:
            rows.append((v, k / m))
    return rows


def scenario_report(
    community: Community,
    budgets: Mapping[str, float],
    intensities: Sequence[float],
    rates: Rates,
    t: float = 0.0,
    granularity: float = 0.01,
) -> list[dict]:
    """Per community, intensity and predetermined level: how many buildings are inspected or pre-classified."""
    rows = []
    for label, budget in budgets.items():
        for x in intensities:
            a = assess_event(community, x, t, budget, rates, granularity)
            z = np.array(a.selection.z, dtype=bool)
            for level in (1, 2, 3):
                at_level = a.d_star == level
                rows.append({
                    "community": label,
                    "budget": float(budget),
                    "intensity": float(x),
                    "level": level,
                    "predetermined": int(at_level.sum()),
                    "inspected": int((at_level & z).sum()),
                    "preclassified": int((at_level & ~z).sum()),
                })
    return rows
