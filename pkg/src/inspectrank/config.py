"""Run configuration read from TOML.

Example::

    [inventory]
    path = "inventory.csv"
    scale_by_usage = false

    [costs]
    path = "costs.toml"          # optional, embedded defaults otherwise

    [hazard]
    ln_x_mean = -0.8
    ln_x_std = 0.3
    occurrence_mean = 300.0

    [rates]
    alpha = 0.03
    gamma = 0.03
    beta = 0.03

    [sweep]
    levels = 41                  # or: budgets = [0, 1e5, ...]
    samples = 1000
    seed = 2020
    crn = true
    granularity = 0.01
    cap_fraction = 0.75          # or: cap = 45000000

    [output]
    dir = "out"

Relative paths are resolved against the config file's directory.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping

from ._toml import load_toml
from .costmodel import CostConfig, load_cost_config
from .errors import ConfigError
from .fragility import DEFAULT_USAGE_COEFFICIENTS
from .inventory import UsageScaling, load_inventory
from .knapsack import DEFAULT_CELL_LIMIT
from .simulation import HazardModel, Rates


@dataclass(frozen=True)
class SweepSettings:
    levels: int = 41
    budgets: tuple[float, ...] | None = None
    samples: int = 1000
    seed: int = 2020
    crn: bool = True
    granularity: float = 0.01
    cell_limit: int = DEFAULT_CELL_LIMIT
    cap: float | None = None
    cap_fraction: float = 0.75


@dataclass(frozen=True)
class RunConfig:
    inventory_path: Path | None = None
    cost_config_path: Path | None = None
    scale_by_usage: bool = False
    scaling_mode: str = "median"
    coefficients: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_USAGE_COEFFICIENTS))
    hazard: HazardModel = field(default_factory=HazardModel)
    rates: Rates = field(default_factory=Rates)
    sweep: SweepSettings = field(default_factory=SweepSettings)
    output_dir: Path = Path("out")

    def scaling(self) -> UsageScaling | None:
        return UsageScaling(dict(self.coefficients), self.scaling_mode) if self.scale_by_usage else None

    def load_buildings(self):
        if self.inventory_path is None:
            raise ConfigError("no inventory given (use --inventory or [inventory] path)")
        if not Path(self.inventory_path).is_file():
            raise ConfigError(f"inventory file not found: {self.inventory_path}")
        return load_inventory(self.inventory_path, scaling=self.scaling())

    def load_costs(self) -> CostConfig:
        if self.cost_config_path is None:
            return CostConfig()
        return load_cost_config(self.cost_config_path)


def _section(data: Mapping, name: str, allowed: set[str]) -> dict:
    sec = data.get(name, {})
    if not isinstance(sec, Mapping):
        raise ConfigError(f"[{name}] must be a table")
    unknown = set(sec) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in [{name}]: {', '.join(sorted(unknown))}")
    return dict(sec)


def run_config_from_dict(data: Mapping, base_dir: Path = Path(".")) -> RunConfig:
    unknown = set(data) - {"inventory", "costs", "hazard", "rates", "sweep", "output"}
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")

    def resolve(p):
        return None if p is None else (base_dir / p if not Path(p).is_absolute() else Path(p))

    inv = _section(data, "inventory", {"path", "scale_by_usage", "scaling_mode", "coefficients"})
    costs = _section(data, "costs", {"path"})
    hazard = _section(data, "hazard", {"ln_x_mean", "ln_x_std", "occurrence_mean", "fixed_time", "fixed_intensity"})
    rates = _section(data, "rates", {"alpha", "gamma", "beta"})
    sweep = _section(data, "sweep", set(SweepSettings.__dataclass_fields__))
    output = _section(data, "output", {"dir"})
    if "budgets" in sweep:
        sweep["budgets"] = tuple(float(b) for b in sweep["budgets"])
    coefficients = dict(DEFAULT_USAGE_COEFFICIENTS)
    coefficients.update(inv.get("coefficients", {}))
    return RunConfig(
        inventory_path=resolve(inv.get("path")),
        cost_config_path=resolve(costs.get("path")),
        scale_by_usage=bool(inv.get("scale_by_usage", False)),
        scaling_mode=inv.get("scaling_mode", "median"),
        coefficients=coefficients,
        hazard=HazardModel(**hazard),
        rates=Rates(**rates),
        sweep=SweepSettings(**sweep),
        output_dir=resolve(output.get("dir", "out")),
    )


def load_run_config(path) -> RunConfig:
    path = Path(path)
    return run_config_from_dict(load_toml(path), base_dir=path.parent)


def with_overrides(config: RunConfig, **overrides) -> RunConfig:
    """Apply non-None overrides; ``sweep__x`` keys target :class:`SweepSettings`."""
    top = {k: v for k, v in overrides.items() if v is not None and "__" not in k}
    nested = {k.split("__", 1)[1]: v for k, v in overrides.items() if v is not None and k.startswith("sweep__")}
    if nested:
        top["sweep"] = replace(config.sweep, **nested)
    return replace(config, **top)
