"""Regenerate ``three_buildings_oracle.json``.

Deliberately independent of the package: state probabilities come from
mpmath at 50 digits, money is Decimal, and the inspection set is found by
listing all 8 subsets. Run once and commit the JSON; tests only read it.
"""

import itertools
import json
from decimal import ROUND_CEILING, ROUND_FLOOR, ROUND_HALF_EVEN, Decimal, getcontext
from pathlib import Path

import mpmath

getcontext().prec = 50
mpmath.mp.dps = 50

HERE = Path(__file__).parent
X = "0.5"
T = "10"
ALPHA, GAMMA, BETA = "0.02", "0.03", "0.05"
BUDGETS = ["0", "40000", "110000"]

MATRICES = {
    "Residential": [[0, 350000, 750000], [3750000, 0, 500000], [7250000, 3600000, 0]],
    "Commercial": [[0, 3000000, 5500000], [89000000, 0, 4000000], [14500000, 7200000, 0]],
    "Critical": [[0, 7750000, 15000000], [25750000, 0, 10000000], [36250000, 18000000, 0]],
}
# id, stories, area index, usage, mu0, sigma0, mu1, sigma1 (same as three_buildings.csv)
BUILDINGS = [
    ("f1", 2, 3, "Residential", "0.45", "0.4", "0.9", "0.4"),
    ("f2", 1, 1, "Commercial", "0.3", "0.5", "0.6", "0.5"),
    ("f3", 3, 5, "Critical", "0.6", "0.35", "1.1", "0.35"),
]


def phi(z):
    return mpmath.ncdf(z)


def fragility(x, mu, sigma):
    return phi((mpmath.log(x) - mpmath.log(mu)) / sigma)


def cents(v: Decimal) -> int:
    return int((v * 100).to_integral_value(ROUND_HALF_EVEN))


def main():
    x = mpmath.mpf(X)
    rows = []
    for bid, stories, cat, usage, mu0, s0, mu1, s1 in BUILDINGS:
        f0 = fragility(x, mpmath.mpf(mu0), mpmath.mpf(s0))
        f1 = fragility(x, mpmath.mpf(mu1), mpmath.mpf(s1))
        p = [Decimal(mpmath.nstr(v, 40)) for v in (1 - f0, f0 - f1, f1)]
        table = [[Decimal(c) * cat for c in row] for row in MATRICES[usage]]
        expected = [sum(p[s] * table[s][d] for s in range(3)) for d in range(3)]
        best = min(range(3), key=lambda d: (expected[d], -d))
        w = Decimal(500 + 500 * (cat - 1)) * 10 * stories
        rows.append(dict(id=bid, p=p, table=table, d=best + 1, c=expected[best], w=w))

    t = Decimal(T)
    cap_factor = ((Decimal(ALPHA) - Decimal(GAMMA)) * t).exp()
    cost_factor = (Decimal(GAMMA) * t).exp() * (-Decimal(BETA) * t).exp()
    budgets = []
    for r in BUDGETS:
        cap = (Decimal(r) * cap_factor * 100).to_integral_value(ROUND_FLOOR)
        best = None
        for z in itertools.product((0, 1), repeat=3):
            weight = sum(int((b["w"] * 100).to_integral_value(ROUND_CEILING)) for b, zi in zip(rows, z) if zi)
            if weight > cap:
                continue
            value = sum(cents(b["c"]) for b, zi in zip(rows, z) if zi)
            key = (value, -weight)
            if best is None or key > best[0]:
                best = (key, z)
        z = best[1]
        costs = {}
        for states in itertools.product((1, 2, 3), repeat=3):
            inspected = sum(b["w"] for b, zi in zip(rows, z) if zi)
            mis = sum(b["table"][s - 1][b["d"] - 1] for b, zi, s in zip(rows, z, states) if not zi)
            costs["".join(map(str, states))] = str((cost_factor * (inspected + mis)).quantize(Decimal("0.000001")))
        budgets.append({"budget": r, "capacity_cents": int(cap), "z": list(z), "discounted_cost": costs})

    out = {
        "x": X, "t": T, "alpha": ALPHA, "gamma": GAMMA, "beta": BETA,
        "buildings": [
            {"id": b["id"], "probabilities": [str(v.quantize(Decimal("1e-30"))) for v in b["p"]],
             "d_star": b["d"], "c_star": str(b["c"].quantize(Decimal("0.000001"))), "w": str(b["w"])}
            for b in rows
        ],
        "budgets": budgets,
    }
    (HERE / "three_buildings_oracle.json").write_text(json.dumps(out, indent=1) + "\n")


if __name__ == "__main__":
    main()
