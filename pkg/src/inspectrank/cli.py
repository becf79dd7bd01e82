"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data/config validation error,
3 resource limit (knapsack table too large).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, load_run_config, with_overrides
from .costmodel import CostConfig, dump_cost_config
from .errors import ConfigError, InspectRankError
from .fragility import curve_samples
from .inventory import generate_inventory, inventory_to_csv, load_synthesis_config
from .knapsack import brute_force
from .simulation import (
    BudgetSweep,
    Community,
    assess_event,
    budget_grid,
    budget_sweep,
    cost_cdf,
    pareto_front,
    scenario_report,
    select_budgets,
)

logger = logging.getLogger("inspectrank")

SCHEMAS = {
    "decisions": "# inspectrank.decisions/1",
    "sweep": "# inspectrank.sweep/1",
    "samples": "# inspectrank.samples/1",
    "cdf": "# inspectrank.cdf/1",
    "scenario": "# inspectrank.scenario/1",
    "curves": "# inspectrank.curves/1",
    "regional": "# inspectrank.regional/1",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _csv_text(schema: str, header, rows) -> str:
    buf = io.StringIO()
    buf.write(SCHEMAS[schema] + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _emit(text: str, path) -> None:
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text, encoding="utf-8")


def _write_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _num(v: float) -> str:
    return repr(float(v))


def _money(v: float) -> str:
    return f"{v:.2f}"


def _run_config(args) -> RunConfig:
    config = load_run_config(args.config) if getattr(args, "config", None) else RunConfig()
    return with_overrides(
        config,
        inventory_path=Path(args.inventory) if getattr(args, "inventory", None) else None,
        cost_config_path=Path(args.cost_config) if getattr(args, "cost_config", None) else None,
        scale_by_usage=True if getattr(args, "scale_by_usage", False) else None,
        output_dir=Path(args.out_dir) if getattr(args, "out_dir", None) else None,
        sweep__samples=getattr(args, "samples", None),
        sweep__levels=getattr(args, "levels", None),
        sweep__seed=getattr(args, "seed", None),
        sweep__granularity=getattr(args, "granularity", None),
        sweep__cap=getattr(args, "cap", None),
        sweep__crn=False if getattr(args, "no_crn", False) else None,
    )


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_gen_inventory(args) -> int:
    spec = dict(load_synthesis_config(args.config)) if args.config else {}
    seed = spec.pop("seed", 0) if args.seed is None else args.seed
    if args.total is not None:
        spec = dict(spec, total=args.total)
        if "usage_counts" in spec and sum(spec["usage_counts"].values()) != args.total:
            spec.pop("usage_counts")
    if not spec:
        spec = {"total": 581}
    buildings = generate_inventory(spec, int(seed))
    _emit(inventory_to_csv(buildings), args.output)
    return 0


def cmd_cost_config(args) -> int:
    if not args.dump:
        raise UsageError("cost-config: nothing to do (use --dump)")
    _emit(dump_cost_config(CostConfig()), args.output)
    return 0


def cmd_curves(args) -> int:
    config = _run_config(args)
    buildings = config.load_buildings()
    match = [b for b in buildings if b.id == args.id]
    if not match:
        raise ConfigError(f"no building with id {args.id!r}")
    xs = np.geomspace(args.xmin, args.xmax, args.points)
    rows = [[_num(v) for v in row] for row in curve_samples(match[0], xs.tolist())]
    _emit(_csv_text("curves", ["x", "F0", "F1", "p1", "p2", "p3"], rows), args.output)
    return 0


def prioritize_table(community: Community, assessment) -> tuple[list[list[str]], dict]:
    """Rows of the decision CSV in priority order plus the summary payload."""
    z = np.array(assessment.selection.z, dtype=bool)
    w = np.array(community.w_dollars)
    c_star = assessment.c_star
    with np.errstate(divide="ignore"):
        ratio = c_star / w
    order = sorted(range(len(community)), key=lambda i: (not z[i], -ratio[i], community.ids[i]))
    rows = []
    for i in order:
        p = assessment.probs[i]
        rows.append([
            community.ids[i], _num(assessment.x),
            f"{p[0]:.12g}", f"{p[1]:.12g}", f"{p[2]:.12g}",
            int(assessment.d_star[i]), _money(c_star[i]), _money(w[i]), "true" if z[i] else "false",
        ])
    counts = {}
    for level in (1, 2, 3):
        at = assessment.d_star == level
        counts[str(level)] = {"inspected": int((at & z).sum()), "preclassified": int((at & ~z).sum())}
    summary = {
        "intensity": assessment.x,
        "time": assessment.t,
        "budget": assessment.budget,
        "buildings": len(community),
        "inspected": int(z.sum()),
        "inspection_cost": assessment.selection.total_weight,
        "expected_residual_cost": assessment.selection.residual_cost,
        "avoided_expected_cost": assessment.selection.total_value,
        "full_budget": community.full_budget,
        "counts_by_level": counts,
    }
    return rows, summary


def cmd_prioritize(args) -> int:
    config = _run_config(args)
    community = Community(config.load_buildings(), config.load_costs())
    solver = brute_force if args.solver == "brute" else None
    assessment = assess_event(
        community, args.intensity, args.time, args.budget, config.rates, config.sweep.granularity, solver=solver
    )
    rows, summary = prioritize_table(community, assessment)
    header = ["id", "x", "p1", "p2", "p3", "d_star", "c_star", "w", "inspect_flag"]
    _emit(_csv_text("decisions", header, rows), args.output)
    if args.summary:
        _write_json(Path(args.summary), summary)
    return 0


def _sweep_outputs(out: Path, sweep: BudgetSweep, community: Community, choice, config: RunConfig) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    sweep_rows = [
        [_num(r), _num(m), _num(s), int(f)] for r, m, s, f in zip(sweep.budgets, sweep.mean, sweep.std, sweep.pareto)
    ]
    (out / "sweep.csv").write_text(_csv_text("sweep", ["budget", "mean", "std", "pareto"], sweep_rows), encoding="utf-8")
    sample_rows = []
    for k, r in enumerate(sweep.budgets):
        for m in range(sweep.samples):
            sample_rows.append([_num(r), m, _num(sweep.t[k, m]), _num(sweep.x[k, m]), _num(sweep.costs[k, m])])
    (out / "samples.csv").write_text(
        _csv_text("samples", ["budget", "sample", "t", "x", "discounted_cost"], sample_rows), encoding="utf-8"
    )
    cdf_rows = []
    index = {float(r): k for k, r in enumerate(sweep.budgets)}
    for name, budget in choice.communities().items():
        for cost, prob in cost_cdf(sweep.costs[index[budget]]):
            cdf_rows.append([name, _num(budget), _num(cost), _num(prob)])
    (out / "cdf.csv").write_text(_csv_text("cdf", ["community", "budget", "cost", "probability"], cdf_rows), encoding="utf-8")
    summary = {
        "full_budget": community.full_budget,
        "buildings": len(community),
        "samples": sweep.samples,
        "seed": config.sweep.seed,
        "crn": sweep.crn,
        "granularity": config.sweep.granularity,
        "demand_multiplier": community.costs.inspection.demand_multiplier,
        "cap": choice.cap,
        "budgets": {
            "unprepared": choice.unprepared,
            "risk_neutral": choice.risk_neutral,
            "risk_averse": choice.risk_averse,
            "min_variance": choice.min_variance,
            "extremely_risk_averse": choice.extremely_risk_averse,
        },
        "mean_std_ratio": [None if math.isinf(v) else v for v in choice.ratio],
    }
    _write_json(out / "summary.json", summary)
    return summary


def cmd_sweep(args) -> int:
    config = _run_config(args)
    buildings = config.load_buildings()
    base_costs = config.load_costs()
    factors = args.rate_factor or [1.0]
    out = config.output_dir
    regional_rows = []
    regional_cdf = []
    for factor in factors:
        costs = base_costs.with_demand_multiplier(base_costs.inspection.demand_multiplier * factor)
        community = Community(buildings, costs)
        s = config.sweep
        budgets = s.budgets if s.budgets is not None else budget_grid(community.full_budget, s.levels)
        sweep = budget_sweep(
            community, config.hazard, config.rates, budgets, s.samples, s.seed,
            crn=s.crn, granularity=s.granularity, threads=args.threads, cell_limit=s.cell_limit,
        )
        cap = s.cap if s.cap is not None else s.cap_fraction * float(sweep.budgets[-1])
        choice = select_budgets(sweep, cap)
        target = out if len(factors) == 1 else out / f"rate-{factor:g}"
        _sweep_outputs(target, sweep, community, choice, config)
        regional_rows.append([_num(factor), _num(community.full_budget), _num(choice.risk_neutral),
                              _num(choice.risk_averse), _num(float(sweep.mean.min()))])
        index = {float(r): k for k, r in enumerate(sweep.budgets)}
        for name, budget in choice.communities().items():
            for cost, prob in cost_cdf(sweep.costs[index[budget]]):
                regional_cdf.append([_num(factor), name, _num(budget), _num(cost), _num(prob)])
    if len(factors) > 1:
        (out / "regional.csv").write_text(
            _csv_text("regional", ["rate_factor", "full_budget", "risk_neutral", "risk_averse", "min_mean"], regional_rows),
            encoding="utf-8",
        )
        (out / "regional_cdf.csv").write_text(
            _csv_text("cdf", ["rate_factor", "community", "budget", "cost", "probability"], regional_cdf),
            encoding="utf-8",
        )
    return 0


def read_sweep_csv(path) -> tuple[list[float], list[float], list[float]]:
    with open(path, newline="", encoding="utf-8") as fh:
        lines = [line for line in fh if not line.startswith("#")]
    reader = csv.DictReader(lines)
    missing = {"budget", "mean", "std"} - set(reader.fieldnames or ())
    if missing:
        raise ConfigError(f"{path}: missing column(s) {', '.join(sorted(missing))}")
    budgets, means, stds = [], [], []
    for row in reader:
        try:
            budgets.append(float(row["budget"]))
            means.append(float(row["mean"]))
            stds.append(float(row["std"]))
        except ValueError as exc:
            raise ConfigError(f"{path}, row {reader.line_num}: {exc}") from None
    if not budgets:
        raise ConfigError(f"{path}: no rows")
    return budgets, means, stds


def cmd_pareto(args) -> int:
    budgets, means, stds = read_sweep_csv(args.sweep_csv)
    flags = pareto_front(list(zip(means, stds)))
    rows = [[_num(r), _num(m), _num(s), int(f)] for r, m, s, f in zip(budgets, means, stds, flags)]
    _emit(_csv_text("sweep", ["budget", "mean", "std", "pareto"], rows), args.output)
    return 0


def _parse_budget(text: str) -> tuple[str, float]:
    label, sep, value = text.partition("=")
    if not sep:
        label, value = f"budget_{text}", text
    try:
        return label, float(value)
    except ValueError:
        raise UsageError(f"bad --budget {text!r}; expected LABEL=DOLLARS") from None


def cmd_simulate(args) -> int:
    config = _run_config(args)
    community = Community(config.load_buildings(), config.load_costs())
    budgets: dict[str, float] = {}
    if args.summary:
        data = json.loads(Path(args.summary).read_text(encoding="utf-8"))
        named = data["budgets"]
        for key in ("unprepared", "risk_neutral", "risk_averse", "extremely_risk_averse"):
            budgets[key] = float(named[key])
    for text in args.budget or []:
        label, value = _parse_budget(text)
        budgets[label] = value
    if not budgets:
        budgets = {"unprepared": 0.0, "extremely_risk_averse": community.full_budget}
    rows = scenario_report(community, budgets, args.intensity, config.rates, args.time, config.sweep.granularity)
    header = ["community", "budget", "intensity", "level", "predetermined", "inspected", "preclassified"]
    table = [[r["community"], _num(r["budget"]), _num(r["intensity"]), r["level"], r["predetermined"],
              r["inspected"], r["preclassified"]] for r in rows]
    _emit(_csv_text("scenario", header, table), args.output)
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="run configuration (TOML)")
    p.add_argument("--inventory", help="inventory CSV")
    p.add_argument("--cost-config", help="cost configuration (TOML)")
    p.add_argument("--scale-by-usage", action="store_true", help="multiply curves by the usage coefficients at load")
    p.add_argument("--granularity", type=float, help="knapsack weight unit in dollars (default 0.01)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="inspectrank", description="Post-event building inspection prioritization.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("gen-inventory", help="synthesize a building inventory")
    p.add_argument("--config", help="synthesis configuration (TOML)")
    p.add_argument("--total", type=int)
    p.add_argument("--seed", type=int, help="RNG seed (default: the config's seed, else 0)")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_gen_inventory)

    p = sub.add_parser("cost-config", help="show the cost configuration")
    p.add_argument("--dump", action="store_true", help="print the embedded defaults as TOML")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_cost_config)

    p = sub.add_parser("curves", help="sample a building's fragility and state-probability curves")
    _common(p)
    p.add_argument("--id", required=True)
    p.add_argument("--xmin", type=float, default=0.01)
    p.add_argument("--xmax", type=float, default=3.0)
    p.add_argument("--points", type=int, default=100)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("prioritize", help="decisions and inspection set for one event")
    _common(p)
    p.add_argument("--intensity", type=float, required=True)
    p.add_argument("--time", type=float, default=0.0, help="years until the event")
    p.add_argument("--budget", type=float, required=True, help="inspection budget in time-0 dollars")
    p.add_argument("--solver", choices=["dp", "brute"], default="dp")
    p.add_argument("-o", "--output")
    p.add_argument("--summary", help="write the summary JSON here")
    p.set_defaults(func=cmd_prioritize)

    p = sub.add_parser("sweep", help="Monte Carlo mean/std of the cost over a budget grid")
    _common(p)
    p.add_argument("--samples", type=int)
    p.add_argument("--levels", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--no-crn", action="store_true", help="sample each budget independently")
    p.add_argument("--cap", type=float, help="risk-averse budget cap in dollars")
    p.add_argument("--rate-factor", type=float, action="append",
                   help="scale the inspection demand multiplier (repeatable)")
    p.add_argument("--threads", type=int, help="worker threads (default: $INSPECTRANK_THREADS or CPU count)")
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("pareto", help="recompute Pareto flags of a sweep.csv")
    p.add_argument("sweep_csv")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_pareto)

    p = sub.add_parser("simulate", help="fixed-event scenario report per community")
    _common(p)
    p.add_argument("--intensity", type=float, action="append", required=True)
    p.add_argument("--time", type=float, default=0.0)
    p.add_argument("--budget", action="append", help="LABEL=DOLLARS (repeatable)")
    p.add_argument("--summary", help="summary.json from `sweep` supplying the named budgets")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"inspectrank: error: {exc}", file=sys.stderr)
        return 1
    except InspectRankError as exc:
        print(f"inspectrank: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"inspectrank: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
