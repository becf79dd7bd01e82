"""Lognormal fragility curves and the three safety-state probabilities.

A building carries two exceedance curves: ``curve0`` bounds safety level 1
from level 2 (EMS98 D1) and ``curve1`` bounds level 2 from level 3 (EMS98
D2/D3 and worse). At intensity ``x``::

    p1 = 1 - F0(x)
    p2 = F0(x) - F1(x)
    p3 = F1(x)

The curve median ``mu`` lives in intensity units, so the exceedance
probability is ``Phi((ln x - ln mu) / sigma)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import DomainError

logger = logging.getLogger(__name__)

__all__ = [
    "DEFAULT_USAGE_COEFFICIENTS",
    "FragilityCurve",
    "StateProbabilities",
    "evaluate",
    "norm_cdf",
    "scale_curve",
    "state_probabilities",
    "state_probability_matrix",
]

_INV_SQRT2 = 1.0 / math.sqrt(2.0)

# p2 in (-NEGATIVE_BAND_TOL, 0) is treated as rounding noise and clamped.
NEGATIVE_BAND_TOL = 1e-12

DEFAULT_USAGE_COEFFICIENTS = {
    "Residential": 2.5,
    "Commercial": 3.0,
    "Critical": 3.5,
}


def norm_cdf(z: float) -> float:
    """Standard normal CDF, ``0.5 * erfc(-z / sqrt(2))``.

    Using ``erfc`` rather than ``1 + erf`` keeps full relative precision in
    the lower tail; absolute error stays below 1e-15 everywhere.
    """
    return 0.5 * math.erfc(-z * _INV_SQRT2)


@dataclass(frozen=True)
class FragilityCurve:
    """Lognormal exceedance curve with median ``mu`` and dispersion ``sigma``."""

    mu: float
    sigma: float

    def __post_init__(self):
        for name in ("mu", "sigma"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise DomainError(f"fragility {name} must be a positive finite number, got {value!r}")

    def __call__(self, x: float) -> float:
        return evaluate(self, x)


@dataclass(frozen=True)
class StateProbabilities:
    p1: float
    p2: float
    p3: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.p1, self.p2, self.p3)

    def __iter__(self):
        return iter(self.as_tuple())

    def __getitem__(self, level_index: int) -> float:
        return self.as_tuple()[level_index]


def evaluate(curve: FragilityCurve, x: float) -> float:
    """Probability that the response exceeds the curve's threshold at intensity ``x``."""
    if not x >= 0:
        raise DomainError(f"intensity must be non-negative, got {x!r}")
    if x == 0:
        return 0.0
    if math.isinf(x):
        return 1.0
    return norm_cdf((math.log(x) - math.log(curve.mu)) / curve.sigma)


def _clamp_band(p1: float, p2: float, p3: float) -> tuple[float, float, float]:
    if p2 >= 0:
        return p1, p2, p3
    if p2 <= -NEGATIVE_BAND_TOL:
        raise DomainError(f"fragility curves cross: P(level 2) = {p2!r}")
    logger.debug("clamping p2=%r to zero", p2)
    total = p1 + p3
    return p1 / total, 0.0, p3 / total


def state_probabilities(building, x: float) -> StateProbabilities:
    """Safety-level probabilities of ``building`` at intensity ``x``.

    ``building`` needs ``curve0`` and ``curve1`` attributes.
    """
    f0 = evaluate(building.curve0, x)
    f1 = evaluate(building.curve1, x)
    return StateProbabilities(*_clamp_band(1.0 - f0, f0 - f1, f1))


def _exceedance_array(mu: np.ndarray, sigma: np.ndarray, x: float) -> np.ndarray:
    # Same scalar erfc as ``evaluate`` so batched and single results agree bitwise.
    if x == 0:
        return np.zeros(len(mu))
    log_x = math.log(x)
    return np.fromiter(
        (norm_cdf((log_x - math.log(m)) / s) for m, s in zip(mu.tolist(), sigma.tolist())),
        dtype=float,
        count=len(mu),
    )


def state_probability_matrix(
    mu0: np.ndarray, sigma0: np.ndarray, mu1: np.ndarray, sigma1: np.ndarray, x: float
) -> np.ndarray:
    """Batched :func:`state_probabilities`; returns an ``(n, 3)`` array."""
    if not x >= 0:
        raise DomainError(f"intensity must be non-negative, got {x!r}")
    f0 = _exceedance_array(np.asarray(mu0, float), np.asarray(sigma0, float), x)
    f1 = _exceedance_array(np.asarray(mu1, float), np.asarray(sigma1, float), x)
    probs = np.column_stack([1.0 - f0, f0 - f1, f1])
    bad = probs[:, 1] < 0
    if bad.any():
        for i in np.flatnonzero(bad):
            probs[i] = _clamp_band(*probs[i].tolist())
    return probs


def scale_curve(curve: FragilityCurve, coefficient: float, mode: str = "median") -> FragilityCurve:
    """Multiply the curve parameters by ``coefficient``.

    In ``"median"`` mode (default) both the median intensity and the
    dispersion are multiplied. ``"log"`` mode multiplies the log-median
    instead, i.e. ``mu -> mu ** coefficient``; it exists for sensitivity
    studies only.
    """
    if not coefficient > 0:
        raise DomainError(f"scaling coefficient must be positive, got {coefficient!r}")
    if mode == "median":
        return FragilityCurve(curve.mu * coefficient, curve.sigma * coefficient)
    if mode == "log":
        return FragilityCurve(math.exp(math.log(curve.mu) * coefficient), curve.sigma * coefficient)
    raise DomainError(f"unknown scaling mode {mode!r}; expected 'median' or 'log'")


def curve_samples(building, xs: Iterable[float]) -> list[tuple[float, float, float, float, float, float]]:
    """Rows ``(x, F0, F1, p1, p2, p3)`` for plotting a building's curves."""
    rows = []
    for x in xs:
        p = state_probabilities(building, x)
        rows.append((x, evaluate(building.curve0, x), evaluate(building.curve1, x), p.p1, p.p2, p.p3))
    return rows
