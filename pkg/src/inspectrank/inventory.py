"""Building inventories: taxonomy, CSV loading/serialization, synthesis.

CSV schema (UTF-8, header required, ``#`` lines are comments)::

    id,construction,stories,area_category,usage,mu0,sigma0,mu1,sigma1

``area_category`` accepts an original letter (A-R) or a redefined index
(1-12); the index is canonical and is what gets written back.
"""

from __future__ import annotations

import copy
import csv
import io
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigError, DomainError, ParseError, ValidationError
from .fragility import DEFAULT_USAGE_COEFFICIENTS, FragilityCurve, evaluate, scale_curve

__all__ = [
    "AREA_LETTERS",
    "Building",
    "ConstructionClass",
    "DEFAULT_SYNTHESIS",
    "INVENTORY_COLUMNS",
    "INVENTORY_SCHEMA",
    "UsageClass",
    "UsageScaling",
    "default_grid",
    "generate_inventory",
    "inventory_to_csv",
    "load_inventory",
    "load_synthesis_config",
    "parse_area_category",
    "read_inventory",
    "write_inventory",
]

INVENTORY_SCHEMA = "# inspectrank.inventory/1"
INVENTORY_COLUMNS = ("id", "construction", "stories", "area_category", "usage", "mu0", "sigma0", "mu1", "sigma1")


class ConstructionClass(str, Enum):
    M = "M"
    RC = "RC"
    RCT = "RCT"
    RCS = "RCS"
    RCST = "RCST"


class UsageClass(str, Enum):
    RESIDENTIAL = "Residential"
    COMMERCIAL = "Commercial"
    CRITICAL = "Critical"


# Original letter categories (J and K are not used) -> redefined index.
AREA_LETTERS = {
    "A": 1, "B": 1, "C": 1,
    "D": 2, "E": 2,
    "F": 3, "G": 3,
    "H": 4, "I": 5, "L": 6, "M": 7, "N": 8, "O": 9, "P": 10, "Q": 11, "R": 12,
}


def parse_area_category(token) -> int:
    """Map a letter A-R or an integer 1-12 to the redefined category index."""
    if isinstance(token, int) and not isinstance(token, bool):
        index = token
    else:
        text = str(token).strip()
        if text.upper() in AREA_LETTERS:
            return AREA_LETTERS[text.upper()]
        try:
            index = int(text)
        except ValueError:
            raise ParseError(f"unknown floor-area category {token!r}") from None
    if not 1 <= index <= 12:
        raise ParseError(f"floor-area category index {index} outside 1..12")
    return index


def default_grid() -> np.ndarray:
    """Intensity grid used to check curve ordering: 200 log-spaced points on [1e-3, 10]."""
    return np.geomspace(1e-3, 10.0, 200)


@dataclass(frozen=True)
class Building:
    id: str
    construction: ConstructionClass
    stories: int
    area_category: int
    usage: UsageClass
    curve0: FragilityCurve
    curve1: FragilityCurve

    def __post_init__(self):
        if not isinstance(self.stories, int) or self.stories < 1:
            raise ValidationError(f"building {self.id!r}: stories must be an integer >= 1, got {self.stories!r}")
        if not 1 <= self.area_category <= 12:
            raise ValidationError(f"building {self.id!r}: area category {self.area_category} outside 1..12")


def _check_curve_order(b: Building, grid: Iterable[float]) -> float | None:
    """Return the first grid intensity where curve1 exceeds curve0, or None."""
    for x in grid:
        if evaluate(b.curve1, float(x)) > evaluate(b.curve0, float(x)):
            return float(x)
    return None


@dataclass(frozen=True)
class UsageScaling:
    """Per-usage curve scaling applied at load time (seismic-design adjustment)."""

    coefficients: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_USAGE_COEFFICIENTS))
    mode: str = "median"

    def apply(self, b: Building) -> Building:
        c = float(self.coefficients[b.usage.value])
        return Building(
            b.id, b.construction, b.stories, b.area_category, b.usage,
            scale_curve(b.curve0, c, self.mode), scale_curve(b.curve1, c, self.mode),
        )


def _parse_enum(enum_cls, token: str, what: str):
    text = token.strip()
    for member in enum_cls:
        if member.value == text or member.value.lower() == text.lower():
            return member
    allowed = ", ".join(m.value for m in enum_cls)
    raise ParseError(f"unknown {what} {token!r} (expected one of {allowed})")


def _parse_float(token: str, what: str) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"{what} is not a number: {token!r}") from None
    return value


def _parse_row(rec: Mapping[str, str]) -> Building:
    stories_text = rec["stories"].strip()
    try:
        stories = int(stories_text)
    except ValueError:
        raise ParseError(f"stories is not an integer: {stories_text!r}") from None
    try:
        curve0 = FragilityCurve(_parse_float(rec["mu0"], "mu0"), _parse_float(rec["sigma0"], "sigma0"))
        curve1 = FragilityCurve(_parse_float(rec["mu1"], "mu1"), _parse_float(rec["sigma1"], "sigma1"))
    except DomainError as exc:
        raise ValidationError(str(exc)) from None
    bid = rec["id"].strip()
    if not bid:
        raise ParseError("empty building id")
    return Building(
        id=bid,
        construction=_parse_enum(ConstructionClass, rec["construction"], "construction class"),
        stories=stories,
        area_category=parse_area_category(rec["area_category"]),
        usage=_parse_enum(UsageClass, rec["usage"], "usage class"),
        curve0=curve0,
        curve1=curve1,
    )


def read_inventory(
    stream: io.TextIOBase,
    grid: Sequence[float] | None = None,
    scaling: UsageScaling | None = None,
    source=None,
) -> list[Building]:
    """Parse an inventory from an open text stream; see :func:`load_inventory`."""
    grid = default_grid() if grid is None else grid
    numbered = [(n, line) for n, line in enumerate(stream, start=1) if line.strip() and not line.lstrip().startswith("#")]
    if not numbered:
        raise ParseError("missing header", path=source)
    reader = csv.reader(line for _, line in numbered)
    header = [h.strip() for h in next(reader)]
    missing = [c for c in INVENTORY_COLUMNS if c not in header]
    if missing:
        raise ParseError(f"missing column(s): {', '.join(missing)}", row=numbered[0][0], path=source)

    buildings: list[Building] = []
    seen: dict[str, int] = {}
    for (lineno, _), values in zip(numbered[1:], reader):
        if len(values) != len(header):
            raise ParseError(f"expected {len(header)} fields, found {len(values)}", row=lineno, path=source)
        rec = dict(zip(header, values))
        try:
            b = _parse_row(rec)
            if scaling is not None:
                b = scaling.apply(b)
        except ParseError as exc:
            raise type(exc)(str(exc), row=lineno, path=source) from None
        except (DomainError, KeyError) as exc:
            raise ValidationError(str(exc), row=lineno, path=source) from None
        if b.id in seen:
            raise ValidationError(f"duplicate id {b.id!r} (first seen on row {seen[b.id]})", row=lineno, path=source)
        crossing = _check_curve_order(b, grid)
        if crossing is not None:
            raise ValidationError(
                f"building {b.id!r}: curve1 exceeds curve0 at intensity {crossing:.6g}", row=lineno, path=source
            )
        seen[b.id] = lineno
        buildings.append(b)
    return buildings


def load_inventory(
    path, grid: Sequence[float] | None = None, scaling: UsageScaling | None = None
) -> list[Building]:
    """Load and validate an inventory CSV.

    Parameters
    ----------
    path
        CSV file following ``INVENTORY_COLUMNS``.
    grid
        Intensities on which ``curve1 <= curve0`` is checked. Defaults to
        :func:`default_grid`.
    scaling
        Optional per-usage curve scaling applied before validation.

    Raises
    ------
    ParseError
        Bad token or missing column; the message names the row.
    ValidationError
        Curve ordering violated, stories < 1 or duplicate id.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        return read_inventory(fh, grid=grid, scaling=scaling, source=path)


def inventory_to_csv(buildings: Iterable[Building]) -> str:
    buf = io.StringIO()
    buf.write(INVENTORY_SCHEMA + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(INVENTORY_COLUMNS)
    for b in buildings:
        writer.writerow([
            b.id, b.construction.value, b.stories, b.area_category, b.usage.value,
            repr(b.curve0.mu), repr(b.curve0.sigma), repr(b.curve1.mu), repr(b.curve1.sigma),
        ])
    return buf.getvalue()


def write_inventory(buildings: Iterable[Building], path) -> None:
    Path(path).write_text(inventory_to_csv(buildings), encoding="utf-8")


# ---------------------------------------------------------------------------
# Synthesis
# ---------------------------------------------------------------------------

# Illustrative class-level curves (no published per-building parameters exist).
# Medians in g; both curves of a class share sigma so they never cross.
DEFAULT_SYNTHESIS: dict = {
    "total": 581,
    "usage_counts": {"Residential": 565, "Commercial": 12, "Critical": 4},
    "construction_weights": {"M": 0.46, "RC": 0.30, "RCT": 0.20, "RCS": 0.025, "RCST": 0.015},
    "stories_weights": {"1": 0.25, "2": 0.35, "3": 0.25, "4": 0.15},
    "area_weights": {
        "1": 0.22, "2": 0.20, "3": 0.17, "4": 0.12, "5": 0.08, "6": 0.06,
        "7": 0.05, "8": 0.04, "9": 0.03, "10": 0.015, "11": 0.01, "12": 0.005,
    },
    "fragility": {
        "M": {"mu0": 0.32, "sigma0": 0.12, "mu1": 0.60, "sigma1": 0.12},
        "RC": {"mu0": 0.67, "sigma0": 0.12, "mu1": 1.20, "sigma1": 0.12},
        "RCT": {"mu0": 0.53, "sigma0": 0.12, "mu1": 0.90, "sigma1": 0.12},
        "RCS": {"mu0": 0.90, "sigma0": 0.12, "mu1": 1.50, "sigma1": 0.12},
        "RCST": {"mu0": 0.76, "sigma0": 0.12, "mu1": 1.34, "sigma1": 0.12},
    },
    "story_factor": 0.95,
    "mu_jitter": 0.10,
    "scaling": {"enabled": True, "mode": "median", **DEFAULT_USAGE_COEFFICIENTS},
}


def _merge(base: dict, override: Mapping) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(out.get(key), dict):
            # Weight tables are replaced wholesale so stale keys cannot leak in.
            if key.endswith("_weights") or key == "usage_counts":
                out[key] = dict(value)
            else:
                out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def load_synthesis_config(path) -> dict:
    """Read a TOML synthesis config; keys not given fall back to ``DEFAULT_SYNTHESIS``."""
    from ._toml import load_toml

    return load_toml(path)


def _weights(table: Mapping, keys: Sequence[str], what: str) -> np.ndarray:
    unknown = set(map(str, table)) - set(keys)
    if unknown:
        raise ConfigError(f"unknown {what} key(s): {', '.join(sorted(unknown))}")
    w = np.array([float(table.get(k, 0.0)) for k in keys])
    if (w < 0).any() or not np.isfinite(w).all():
        raise ConfigError(f"{what} must be non-negative")
    if w.sum() <= 0:
        raise ConfigError(f"{what} must have a positive entry")
    return w / w.sum()


def _cell_list(cfg: dict) -> list[tuple[str, str, int, int]] | None:
    cells = cfg.get("cells")
    if not cells:
        return None
    out = []
    for cell in cells:
        count = int(cell.get("count", 0))
        if count < 0:
            raise ConfigError(f"negative count in cell {cell!r}")
        try:
            key = (
                ConstructionClass(cell["construction"]).value,
                UsageClass(cell["usage"]).value,
                int(cell["stories"]),
                parse_area_category(cell["area_category"]),
            )
        except (KeyError, ValueError, ParseError) as exc:
            raise ConfigError(f"bad cell {cell!r}: {exc}") from None
        out.extend([key] * count)
    return out


def generate_inventory(spec: Mapping, seed: int) -> list[Building]:
    """Synthesize an inventory from a configuration.

    ``spec`` either lists explicit ``cells`` (construction, usage, stories,
    area_category, count) or gives ``total`` plus marginal weights; when
    ``usage_counts`` is present those counts are reproduced exactly. Missing
    keys fall back to :data:`DEFAULT_SYNTHESIS`. Output is a pure function of
    ``(spec, seed)``.
    """
    if not spec:
        raise ConfigError("empty synthesis spec")
    cfg = _merge(DEFAULT_SYNTHESIS, spec)
    if "total" in spec and "usage_counts" not in spec and "cells" not in spec:
        # A bare total rescales the default usage split instead of contradicting it.
        cfg.pop("usage_counts", None)
    rng = np.random.default_rng(seed)

    cells = _cell_list(cfg)
    if cells is not None:
        attrs = [cells[i] for i in rng.permutation(len(cells))] if cells else []
    else:
        total = int(cfg.get("total", 0))
        if total < 0:
            raise ConfigError(f"negative total {total}")
        usage_keys = [u.value for u in UsageClass]
        counts = cfg.get("usage_counts")
        if counts:
            n_usage = [int(counts.get(k, 0)) for k in usage_keys]
            if set(counts) - set(usage_keys):
                raise ConfigError(f"unknown usage class in usage_counts: {sorted(set(counts) - set(usage_keys))}")
            if min(n_usage) < 0:
                raise ConfigError("negative usage count")
            if "total" in spec and sum(n_usage) != total:
                raise ConfigError(f"usage counts sum to {sum(n_usage)}, total is {total}")
            total = sum(n_usage)
            usages = np.repeat(np.arange(3), n_usage)
            usages = usages[rng.permutation(total)]
        else:
            p = _weights(cfg.get("usage_weights", {"Residential": 565, "Commercial": 12, "Critical": 4}), usage_keys, "usage_weights")
            usages = rng.choice(3, size=total, p=p)
        cons_keys = [c.value for c in ConstructionClass]
        cons = rng.choice(5, size=total, p=_weights(cfg["construction_weights"], cons_keys, "construction_weights"))
        story_table = {str(k): v for k, v in cfg["stories_weights"].items()}
        story_keys = sorted(story_table, key=int)
        if any(int(k) < 1 for k in story_keys):
            raise ConfigError("stories_weights keys must be >= 1")
        stories = rng.choice(len(story_keys), size=total, p=_weights(story_table, story_keys, "stories_weights"))
        area_keys = [str(i) for i in range(1, 13)]
        areas = rng.choice(12, size=total, p=_weights({str(parse_area_category(k)): v for k, v in cfg["area_weights"].items()}, area_keys, "area_weights"))
        attrs = [
            (cons_keys[c], usage_keys[u], int(story_keys[s]), int(a) + 1)
            for c, u, s, a in zip(cons, usages, stories, areas)
        ]

    jitter = float(cfg.get("mu_jitter", 0.0))
    story_factor = float(cfg.get("story_factor", 1.0))
    if jitter < 0 or story_factor <= 0:
        raise ConfigError("mu_jitter must be >= 0 and story_factor > 0")
    noise = rng.standard_normal(len(attrs)) * jitter
    scaling_cfg = dict(cfg.get("scaling", {}))
    scaling = None
    if scaling_cfg.pop("enabled", False):
        mode = scaling_cfg.pop("mode", "median")
        scaling = UsageScaling({k: float(v) for k, v in scaling_cfg.items()}, mode)

    width = len(str(len(attrs))) if attrs else 1
    grid = default_grid()
    buildings = []
    for i, ((cons_key, usage_key, n_stories, area), eps) in enumerate(zip(attrs, noise)):
        try:
            params = cfg["fragility"][cons_key]
        except KeyError:
            raise ConfigError(f"no fragility parameters for construction class {cons_key}") from None
        factor = math.exp(eps) * story_factor ** (n_stories - 1)
        try:
            b = Building(
                id=f"b{i + 1:0{width}d}",
                construction=ConstructionClass(cons_key),
                stories=n_stories,
                area_category=area,
                usage=UsageClass(usage_key),
                curve0=FragilityCurve(round(params["mu0"] * factor, 6), float(params["sigma0"])),
                curve1=FragilityCurve(round(params["mu1"] * factor, 6), float(params["sigma1"])),
            )
            if scaling is not None:
                b = scaling.apply(b)
                b = Building(
                    b.id, b.construction, b.stories, b.area_category, b.usage,
                    FragilityCurve(round(b.curve0.mu, 6), round(b.curve0.sigma, 6)),
                    FragilityCurve(round(b.curve1.mu, 6), round(b.curve1.sigma, 6)),
                )
        except (DomainError, ValidationError, KeyError) as exc:
            raise ConfigError(f"cannot build synthetic building {i + 1}: {exc}") from None
        if _check_curve_order(b, grid) is not None:
            raise ConfigError(f"fragility table for {cons_key} yields crossing curves")
        buildings.append(b)
    return buildings
