"""Coordinate charts and jet-evaluable scalar and metric fields."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.stats import qmc

from . import jets
from .errors import DomainError, MetricSignatureError, NumericError
from .jets import MAX_ORDER, Jet

DEFAULT_POINTS = 50
DEFAULT_SEED = 42

RADIAL = (0.1, 2.0)
ANGLE = (0.1, math.pi - 0.1)
HALF_PLANE_HEIGHT = (0.5, 3.0)
FLAT = (-1.0, 1.0)


@dataclass(frozen=True)
class Chart:
    """Coordinate box ``prod [lo_i, hi_i]`` from which sample points are drawn."""

    coordinate_names: tuple[str, ...]
    sample_domain: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if len(self.coordinate_names) != len(self.sample_domain):
            raise ValueError("one sample interval is required per coordinate")
        if self.dim < 1:
            raise ValueError("a chart needs at least one coordinate")
        for lo, hi in self.sample_domain:
            if not lo < hi:
                raise ValueError(f"empty sample interval [{lo}, {hi}]")

    @property
    def dim(self) -> int:
        return len(self.coordinate_names)

    def contains(self, point: Sequence[float], slack: float = 1e-12) -> bool:
        return len(point) == self.dim and all(
            lo - slack <= x <= hi + slack for x, (lo, hi) in zip(point, self.sample_domain)
        )

    def sample(self, count: int = DEFAULT_POINTS, seed: int = DEFAULT_SEED) -> np.ndarray:
        """Deterministic scrambled-Halton points inside the sample box."""
        if count < 1:
            raise ValueError("count must be positive")
        unit = qmc.Halton(d=self.dim, scramble=True, seed=seed).random(count)
        lo = np.array([a for a, _ in self.sample_domain])
        hi = np.array([b for _, b in self.sample_domain])
        return lo + unit * (hi - lo)

    def __add__(self, other: "Chart") -> "Chart":
        return Chart(
            self.coordinate_names + other.coordinate_names,
            self.sample_domain + other.sample_domain,
        )


def _check_point(chart: Chart, point) -> tuple[float, ...]:
    pt = tuple(float(x) for x in point)
    if not chart.contains(pt):
        raise DomainError(f"point {pt} lies outside the sample domain {chart.sample_domain}")
    return pt


@dataclass(frozen=True, eq=False)
class ScalarField:
    """A function on a chart written in terms of jet arithmetic.

    ``fn`` receives the list of coordinate jets and returns a scalar Jet (or
    a plain number for constants).
    """

    chart: Chart
    fn: Callable[[list[Jet]], Jet | float]
    name: str = ""

    def jet(self, coords: list[Jet]) -> Jet:
        out = self.fn(coords)
        if not isinstance(out, Jet):
            out = Jet.constant(out, coords[0].nvars, coords[0].order)
        return out


@dataclass(frozen=True, eq=False)
class MetricField:
    """Riemannian metric ``g_ij`` on a chart.

    ``fn`` maps coordinate jets to an ``n x n`` Jet matrix, or, when
    ``diagonal`` is set, to the list of the ``n`` diagonal entries.
    """

    chart: Chart
    fn: Callable[[list[Jet]], object]
    diagonal: bool = False
    name: str = ""

    @classmethod
    def from_diagonal(cls, chart: Chart, fn, name: str = "") -> "MetricField":
        return cls(chart, fn, diagonal=True, name=name)

    def jet(self, coords: list[Jet]) -> Jet:
        out = self.fn(coords)
        n, order = coords[0].nvars, coords[0].order
        if self.diagonal:
            return jets.diag(list(out), n, order)
        if isinstance(out, Jet):
            return out
        return jets.array(out, n, order)

    def scaled(self, factor: float) -> "MetricField":
        """The metric ``factor * g``."""
        base = self

        def fn(x):
            out = base.fn(x)
            if base.diagonal:
                return [factor * e for e in out]
            if isinstance(out, Jet):
                return out * factor
            return [[factor * e for e in row] for row in out]

        return MetricField(self.chart, fn, self.diagonal, self.name)


def evaluate_jet(field: ScalarField, point: Sequence[float], order: int = 3) -> Jet:
    """Value and all partials up to ``order`` of ``field`` at ``point``."""
    if not 0 <= order <= MAX_ORDER:
        raise ValueError(f"order must lie in 0..{MAX_ORDER}")
    pt = _check_point(field.chart, point)
    out = field.jet(Jet.variables(pt, order))
    if not np.all(np.isfinite(out.coeffs)):
        raise NumericError(f"non-finite jet of {field.name or 'field'} at {pt}")
    return out


def metric_jet(g: MetricField, point: Sequence[float], order: int) -> Jet:
    pt = _check_point(g.chart, point)
    if not 0 <= order <= MAX_ORDER:
        raise ValueError(f"order must lie in 0..{MAX_ORDER}")
    G = g.jet(Jet.variables(pt, order))
    if G.shape != (g.chart.dim, g.chart.dim):
        raise ValueError(f"metric function returned shape {G.shape}")
    if not np.all(np.isfinite(G.coeffs)):
        raise NumericError(f"non-finite metric jet at {pt}")
    check_positive_definite(G.value, pt)
    return G


def check_positive_definite(g0: np.ndarray, where=None) -> None:
    if not np.allclose(g0, g0.T, rtol=0, atol=1e-12 * (1 + np.abs(g0).max())):
        raise MetricSignatureError(f"metric is not symmetric at {where}")
    minors = [np.linalg.det(g0[:k, :k]) for k in range(1, len(g0) + 1)]
    if min(minors) <= 0:
        raise MetricSignatureError(f"metric is not positive definite at {where}")


def metric_at(g: MetricField, point: Sequence[float]) -> tuple[np.ndarray, np.ndarray, float]:
    """``(g_ij, g^ij, det g)`` at ``point``."""
    g0 = metric_jet(g, point, 0).value
    return g0, np.linalg.inv(g0), float(np.linalg.det(g0))


def coordinate_field(chart: Chart, index: int, name: str = "") -> ScalarField:
    return ScalarField(chart, lambda x: x[index], name or chart.coordinate_names[index])
