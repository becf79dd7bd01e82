"""Misprediction cost tables and field-inspection cost model.

Amounts are handled as integer cents internally; public helpers accept and
return dollars.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from ._toml import load_toml
from .errors import ConfigError

__all__ = [
    "CostConfig",
    "CostMatrix",
    "DEFAULT_MATRICES",
    "InspectionCostModel",
    "building_cost_matrix",
    "dump_cost_config",
    "inspection_cost",
    "inspection_cost_cents",
    "load_cost_config",
    "misprediction_cost",
    "to_cents",
]

LEVELS = (1, 2, 3)


def to_cents(dollars: float) -> int:
    return int(round(float(dollars) * 100))


@dataclass(frozen=True)
class CostMatrix:
    """3x3 dollar table; ``entries[s - 1][d - 1]`` is the cost of deciding ``d`` when the state is ``s``."""

    entries: tuple

    def __post_init__(self):
        rows = tuple(tuple(float(v) for v in row) for row in self.entries)
        if len(rows) != 3 or any(len(r) != 3 for r in rows):
            raise ConfigError("cost matrix must be 3x3")
        if any(rows[k][k] != 0 for k in range(3)):
            raise ConfigError("cost matrix diagonal must be zero")
        if any(v < 0 or not math.isfinite(v) for r in rows for v in r):
            raise ConfigError("cost matrix entries must be finite and non-negative")
        object.__setattr__(self, "entries", rows)

    def cost(self, d: int, s: int) -> float:
        return self.entries[s - 1][d - 1]

    def cents(self) -> np.ndarray:
        return np.array([[to_cents(v) for v in row] for row in self.entries], dtype=np.int64)


# Rows: actual state; columns: decision. Dollars per floor-area category.
DEFAULT_MATRICES = {
    "Residential": CostMatrix((
        (0, 350_000, 750_000),
        (3_750_000, 0, 500_000),
        (7_250_000, 3_600_000, 0),
    )),
    "Commercial": CostMatrix((
        (0, 3_000_000, 5_500_000),
        (89_000_000, 0, 4_000_000),
        (14_500_000, 7_200_000, 0),
    )),
    "Critical": CostMatrix((
        (0, 7_750_000, 15_000_000),
        (25_750_000, 0, 10_000_000),
        (36_250_000, 18_000_000, 0),
    )),
}


@dataclass(frozen=True)
class InspectionCostModel:
    """Field-inspection cost: linear in floor-area category, times stories and a surge factor."""

    base_rate: float = 500.0
    increment: float = 500.0
    demand_multiplier: float = 10.0
    per_story: bool = True

    def __post_init__(self):
        if not self.base_rate > 0:
            raise ConfigError("base_rate must be > 0")
        if not self.increment >= 0:
            raise ConfigError("increment must be >= 0")
        if not self.demand_multiplier >= 1:
            raise ConfigError("demand_multiplier must be >= 1")


@dataclass(frozen=True)
class CostConfig:
    matrices: Mapping[str, CostMatrix] = field(default_factory=lambda: dict(DEFAULT_MATRICES))
    inspection: InspectionCostModel = field(default_factory=InspectionCostModel)
    multiply_by_category: bool = True

    def __post_init__(self):
        missing = {"Residential", "Commercial", "Critical"} - set(self.matrices)
        if missing:
            raise ConfigError(f"missing cost matrix for: {', '.join(sorted(missing))}")

    def with_demand_multiplier(self, value: float) -> "CostConfig":
        return replace(self, inspection=replace(self.inspection, demand_multiplier=float(value)))

    @classmethod
    def from_dict(cls, data: Mapping) -> "CostConfig":
        known = {"matrices", "inspection", "multiply_by_category"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown cost-config key(s): {', '.join(sorted(unknown))}")
        matrices = dict(DEFAULT_MATRICES)
        for usage, table in data.get("matrices", {}).items():
            if usage not in DEFAULT_MATRICES:
                raise ConfigError(f"unknown usage class {usage!r} in cost matrices")
            matrices[usage] = CostMatrix(tuple(tuple(row) for row in table))
        insp = data.get("inspection", {})
        try:
            inspection = InspectionCostModel(**insp)
        except TypeError as exc:
            raise ConfigError(f"bad [inspection] table: {exc}") from None
        return cls(matrices, inspection, bool(data.get("multiply_by_category", True)))


def load_cost_config(path) -> CostConfig:
    return CostConfig.from_dict(load_toml(path))


def _fmt_num(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def dump_cost_config(config: CostConfig | None = None) -> str:
    """TOML text that :func:`load_cost_config` reads back to an equal config."""
    config = config or CostConfig()
    insp = config.inspection
    lines = [
        "# inspectrank cost configuration",
        "# Matrices: rows = actual safety level 1..3, columns = decided level 1..3, dollars.",
        "# With multiply_by_category the entries are per floor-area category index.",
        f"multiply_by_category = {str(config.multiply_by_category).lower()}",
        "",
        "[inspection]",
        f"base_rate = {float(insp.base_rate)!r}",
        f"increment = {float(insp.increment)!r}",
        f"demand_multiplier = {float(insp.demand_multiplier)!r}",
        f"per_story = {str(insp.per_story).lower()}",
        "",
        "[matrices]",
    ]
    for usage in ("Residential", "Commercial", "Critical"):
        rows = ", ".join("[" + ", ".join(_fmt_num(v) for v in row) + "]" for row in config.matrices[usage].entries)
        lines.append(f"{usage} = [{rows}]")
    return "\n".join(lines) + "\n"


def misprediction_cost(usage, d: int, s: int, config: CostConfig | None = None) -> float:
    """Tabulated dollars for deciding level ``d`` when the true level is ``s``."""
    if d not in LEVELS or s not in LEVELS:
        raise ValueError(f"safety levels must be 1, 2 or 3, got d={d!r}, s={s!r}")
    config = config or CostConfig()
    key = getattr(usage, "value", usage)
    return config.matrices[key].cost(d, s)


def inspection_cost_cents(model: InspectionCostModel, building) -> int:
    rate = model.base_rate + model.increment * (building.area_category - 1)
    stories = building.stories if model.per_story else 1
    return int(round(rate * 100 * model.demand_multiplier * stories))


def inspection_cost(model: InspectionCostModel, building) -> float:
    """Dollars to field-inspect ``building`` after an event."""
    return inspection_cost_cents(model, building) / 100


def building_cost_matrix(config: CostConfig, building) -> np.ndarray:
    """Effective misprediction table for one building, integer cents, indexed ``[s-1, d-1]``."""
    table = config.matrices[building.usage.value].cents()
    if config.multiply_by_category:
        table = table * building.area_category
    return table


def cost_tensor(config: CostConfig, buildings: Sequence) -> np.ndarray:
    """Stacked :func:`building_cost_matrix` for an inventory, shape ``(n, 3, 3)``."""
    if not buildings:
        return np.zeros((0, 3, 3), dtype=np.int64)
    return np.stack([building_cost_matrix(config, b) for b in buildings])


def inspection_cost_vector(config: CostConfig, buildings: Sequence) -> np.ndarray:
    return np.array([inspection_cost_cents(config.inspection, b) for b in buildings], dtype=np.int64)
