"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``python3 -m pytest tests/test_acceptance.py -v`` (add ``-s``
to see the lines as they happen; they are also repeated in the terminal
summary).
"""

import csv
import itertools
import json
import math
import time
from decimal import Decimal

import numpy as np
import pytest

from inspectrank.cli import main
from inspectrank.costmodel import CostConfig
from inspectrank.fragility import FragilityCurve, state_probabilities, state_probability_matrix
from inspectrank.inventory import Building, ConstructionClass, UsageClass, load_inventory
from inspectrank.knapsack import KnapsackInstance, brute_force, solve
from inspectrank.simulation import (
    Community,
    EventSample,
    HazardModel,
    Rates,
    assess_event,
    budget_sweep,
    pareto_front,
    realized_cost,
)

from conftest import DATA, FIXTURES

RESULTS: list[str] = []


def record(number: int, name: str, ok: bool, detail: str) -> None:
    line = f"criterion {number} {'PASS' if ok else 'FAIL'}: {name} ({detail})"
    RESULTS.append(line)
    print(line)
    assert ok, line


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(line for line in fh if not line.startswith("#")))


@pytest.fixture(scope="module")
def shipped_sweep(tmp_path_factory, monkeypatch_module):
    """The 50-building demonstration sweep (M=1000, 41 budgets, seed 2020), single-threaded."""
    out = tmp_path_factory.mktemp("sweep-1")
    monkeypatch_module.setenv("INSPECTRANK_THREADS", "1")
    start = time.perf_counter()
    code = main(["sweep", "--config", str(DATA / "example_run.toml"), "--out-dir", str(out)])
    elapsed = time.perf_counter() - start
    assert code == 0
    return out, elapsed


@pytest.fixture(scope="module")
def monkeypatch_module():
    mp = pytest.MonkeyPatch()
    yield mp
    mp.undo()


def test_criterion_1_knapsack_matches_enumeration():
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    mismatches = 0
    for k in range(1000):
        n = int(rng.integers(1, 21))
        if k % 2:
            # Inspection-like: whole-hundred weights, cent-valued expected costs with zeros.
            weights = (rng.integers(5, 2000, n) * 100.0).tolist()
            values = (rng.integers(0, 10**9, n) * (rng.random(n) < 0.9) / 100).tolist()
        else:
            # Arbitrary cent amounts.
            weights = (rng.integers(1, 50_000, n) / 100).tolist()
            values = (rng.integers(0, 10**7, n) / 100).tolist()
        capacity = float(rng.uniform(0, 1.1) * sum(weights))
        inst = KnapsackInstance(values, weights, capacity, granularity=0.01)
        fast, exact = solve(inst), brute_force(inst)
        if fast.total_value != exact.total_value or fast.value_cents != exact.value_cents:
            mismatches += 1
    elapsed = time.perf_counter() - start
    record(1, "knapsack DP equals exhaustive enumeration", mismatches == 0 and elapsed < 60,
           f"{mismatches} mismatches in 1000 instances, {elapsed:.1f}s")


def test_criterion_2_probability_normalization_and_monotonicity():
    rng = np.random.default_rng(2)
    shipped = load_inventory(DATA / "synthetic_50.csv")
    worst = 0.0
    for _ in range(10_000):
        if rng.random() < 0.5:
            b = shipped[int(rng.integers(len(shipped)))]
        else:
            mu0 = float(rng.uniform(0.05, 5))
            sigma = float(rng.uniform(0.05, 1.5))
            b = Building("r", ConstructionClass.M, 1, 1, UsageClass.RESIDENTIAL,
                         FragilityCurve(mu0, sigma), FragilityCurve(mu0 * float(rng.uniform(1, 4)), sigma))
        x = float(rng.lognormal(-0.5, 1.5))
        p = state_probabilities(b, x)
        worst = max(worst, abs(p.p1 + p.p2 + p.p3 - 1))
    monotone = True
    for _ in range(200):
        grid = np.sort(rng.uniform(0, float(rng.uniform(0.5, 20)), 200))
        mu0 = rng.uniform(0.05, 5, 20)
        sigma = rng.uniform(0.05, 1.5, 20)
        mu1 = mu0 * rng.uniform(1, 4, 20)
        mats = np.stack([state_probability_matrix(mu0, sigma, mu1, sigma, float(x)) for x in grid])
        monotone &= bool(np.all(np.diff(mats[:, :, 0], axis=0) <= 0) and np.all(np.diff(mats[:, :, 2], axis=0) >= 0))
    for b in shipped:
        grid = np.geomspace(1e-3, 10, 200)
        ps = [state_probabilities(b, float(x)) for x in grid]
        monotone &= all(a.p1 >= c.p1 and a.p3 <= c.p3 for a, c in zip(ps, ps[1:]))
    record(2, "state probabilities sum to one and move monotonically", worst <= 1e-12 and monotone,
           f"max |sum-1| = {worst:.2e}, monotone = {monotone}")


def test_criterion_3_three_building_bookkeeping():
    oracle = json.loads((FIXTURES / "three_buildings_oracle.json").read_text())
    community = Community(load_inventory(FIXTURES / "three_buildings.csv"))
    rates = Rates(float(oracle["alpha"]), float(oracle["gamma"]), float(oracle["beta"]))
    x, t = float(oracle["x"]), float(oracle["t"])
    checked = 0
    worst = Decimal(0)
    for budget in oracle["budgets"]:
        a = assess_event(community, x, t, float(budget["budget"]), rates)
        assert [int(z) for z in a.selection.z] == budget["z"]
        for states in itertools.product((1, 3), repeat=3):
            key = "".join(map(str, states))
            got = realized_cost(EventSample(t, x, np.array(states)), a.selection, a.d_star, community, rates)
            worst = max(worst, abs(Decimal(repr(got)) - Decimal(budget["discounted_cost"][key])))
            checked += 1
    record(3, "realized cost matches the committed oracle", checked == 24 and worst <= Decimal("0.01"),
           f"{checked} cases, max deviation ${worst:.6f}")


def test_criterion_4_full_budget_is_deterministic(shipped_sweep):
    out, _ = shipped_sweep
    community = Community(load_inventory(DATA / "synthetic_50.csv"))
    full = community.full_budget
    top = [r for r in read_rows(out / "samples.csv") if float(r["budget"]) == full]
    worst = max(abs(float(r["discounted_cost"]) - full) for r in top)
    sweep_top = read_rows(out / "sweep.csv")[-1]
    ok = len(top) == 1000 and worst <= 0.01 and float(sweep_top["std"]) == 0.0
    record(4, "full inspection costs exactly the inspections", ok,
           f"{len(top)} samples, max deviation ${worst:.4f}, std {sweep_top['std']}")


def test_criterion_5_pareto_matches_pairwise_oracle():
    rng = np.random.default_rng(5)
    bad = 0
    for k in range(100):
        n = int(rng.integers(1, 201))
        if k % 3 == 0:
            pts = rng.integers(0, 12, (n, 2)).astype(float)  # many ties
        else:
            pts = rng.normal(size=(n, 2))
        pts = [tuple(p) for p in pts.tolist()]
        oracle = [
            not any(m2 <= m and s2 <= s and (m2 < m or s2 < s) for j, (m2, s2) in enumerate(pts) if j != i)
            for i, (m, s) in enumerate(pts)
        ]
        bad += list(pareto_front(pts)) != oracle
    record(5, "Pareto flags equal the O(n^2) dominance oracle", bad == 0, f"{bad} of 100 sets differ")


def test_criterion_6_interior_minimum_on_shipped_inventory(shipped_sweep):
    out, elapsed = shipped_sweep
    sweep = read_rows(out / "sweep.csv")
    means = [float(r["mean"]) for r in sweep]
    k = int(np.argmin(means))
    cdf = read_rows(out / "cdf.csv")
    communities = {r["community"] for r in cdf}
    full_steps = [r for r in cdf if r["community"] == "extremely_risk_averse"]
    ok = (
        len(sweep) == 41
        and 0 < k < len(sweep) - 1
        and means[k] <= 0.9 * means[0]
        and communities == {"unprepared", "risk_neutral", "risk_averse", "extremely_risk_averse"}
        and len(full_steps) == 1 and float(full_steps[0]["probability"]) == 1.0
        and elapsed < 300
    )
    record(6, "interior minimum-mean budget and community CDFs", ok,
           f"min at level {k}/40, mean ratio {means[k] / means[0]:.3f}, "
           f"full-inspection CDF steps {len(full_steps)}, {elapsed:.1f}s")


def test_criterion_7_estimator_convergence():
    community = Community(load_inventory(FIXTURES / "three_buildings.csv"))
    x, t = 0.5, 10.0
    rates = Rates(0.02, 0.03, 0.05)
    hazard = HazardModel(fixed_time=t, fixed_intensity=x)
    m = 10_000
    budgets = [0.0, 40_000.0]
    sweep = budget_sweep(community, hazard, rates, budgets, m, seed=7)
    factor = math.exp((rates.gamma - rates.beta) * t)

    def cdf(mu, sigma):
        return 0.5 * math.erfc(-(math.log(x) - math.log(mu)) / (sigma * math.sqrt(2)))

    lines = []
    ok = True
    for k, r in enumerate(budgets):
        a = assess_event(community, x, t, r, rates)
        mean = 0.0
        mu4_terms = 0.0
        variances = []
        for i, b in enumerate(community.buildings):
            w = community.w_cents[i] / 100
            if a.selection.z[i]:
                mean += factor * w
                variances.append(0.0)
                continue
            f0, f1 = cdf(b.curve0.mu, b.curve0.sigma), cdf(b.curve1.mu, b.curve1.sigma)
            p = (1 - f0, f0 - f1, f1)
            c = [factor * community.tables[i, s, a.d_star[i] - 1] / 100 for s in range(3)]
            mi = sum(pi * ci for pi, ci in zip(p, c))
            vi = sum(pi * (ci - mi) ** 2 for pi, ci in zip(p, c))
            mu4_terms += sum(pi * (ci - mi) ** 4 for pi, ci in zip(p, c))
            mean += mi
            variances.append(vi)
        var = sum(variances)
        mu4 = mu4_terms + 3 * (var**2 - sum(v * v for v in variances))
        se_mean = math.sqrt(var / m)
        se_var = math.sqrt((mu4 - var**2 * (m - 3) / (m - 1)) / m)
        z_mean = (sweep.mean[k] - mean) / se_mean
        z_var = (sweep.std[k] ** 2 - var) / se_var
        ok &= abs(z_mean) <= 3 and abs(z_var) <= 3
        lines.append(f"r={r:g}: mean z={z_mean:+.2f}, var z={z_var:+.2f}")
    record(7, "sample mean and variance converge to closed form", ok, "; ".join(lines))


def test_criterion_8_thread_count_does_not_change_outputs(shipped_sweep, tmp_path, monkeypatch):
    base, _ = shipped_sweep
    same = True
    for threads in ("4", "7"):
        out = tmp_path / f"threads-{threads}"
        monkeypatch.setenv("INSPECTRANK_THREADS", threads)
        assert main(["sweep", "--config", str(DATA / "example_run.toml"), "--out-dir", str(out)]) == 0
        for name in ("sweep.csv", "samples.csv", "cdf.csv", "summary.json"):
            same &= (out / name).read_bytes() == (base / name).read_bytes()
    record(8, "sweep outputs byte-identical across INSPECTRANK_THREADS", same, "threads 1, 4, 7; 4 files each")


def test_criterion_9_regional_rate_study(tmp_path):
    out = tmp_path / "regional"
    code = main(["sweep", "--config", str(DATA / "example_run.toml"), "--out-dir", str(out),
                 "--rate-factor", "0.5", "--rate-factor", "1", "--rate-factor", "2"])
    buildings = load_inventory(DATA / "synthetic_50.csv")
    base = Community(buildings).w_cents.sum()
    half = Community(buildings, CostConfig().with_demand_multiplier(5)).w_cents.sum()
    double = Community(buildings, CostConfig().with_demand_multiplier(20)).w_cents.sum()
    regional = {float(r["rate_factor"]): float(r["full_budget"]) for r in read_rows(out / "regional.csv")}
    exact = 2 * half == base and double == 2 * base
    exact &= regional[0.5] * 2 == regional[1.0] and regional[2.0] == 2 * regional[1.0]
    outputs = all(
        {r["community"] for r in read_rows(out / sub / "cdf.csv")}
        == {"unprepared", "risk_neutral", "risk_averse", "extremely_risk_averse"}
        for sub in ("rate-0.5", "rate-1", "rate-2")
    )
    factors = {r["rate_factor"] for r in read_rows(out / "regional_cdf.csv")}
    ok = code == 0 and exact and outputs and len(factors) == 3
    record(9, "demand multiplier scales the full budget exactly", ok,
           f"r_K = {regional[0.5]:.0f} / {regional[1.0]:.0f} / {regional[2.0]:.0f}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v", "-s"]))
