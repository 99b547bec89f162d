"""Levi-Civita curvature stack evaluated in jet arithmetic.

Index conventions (all arrays are in coordinate components):

* ``christoffel[k, i, j] = Gamma^k_ij``
* ``R(d_i, d_j) d_k = riemann_up[l, i, j, k] d_l`` with
  ``R(X, Y) = [nabla_X, nabla_Y] - nabla_[X,Y]``
* ``riemann[i, j, k, l] = g(R(d_i, d_j) d_l, d_k)``, so a space form of
  curvature K has ``R_ijkl = K (g_ik g_jl - g_il g_jk)``
* ``ricci[j, l] = g^ik R_ijkl`` and ``Ric(S^n) = (n-1) g``
* covariant derivatives put the derivative index first:
  ``nabla_ricci[i, j, k] = nabla_i R_jk``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Sequence

import numpy as np

from . import jets
from .charts import MetricField, ScalarField, _check_point, metric_jet
from .errors import DomainError, NumericError
from .jets import Jet

SYMMETRY_TOL = 1e-10


@dataclass(frozen=True)
class TensorValue:
    """Dense tensor at a point; ``variance`` has one 'u'/'d' flag per slot."""

    entries: np.ndarray
    variance: str
    point: tuple[float, ...]

    def __post_init__(self):
        if self.entries.ndim != len(self.variance):
            raise ValueError("variance string must have one flag per tensor slot")
        if not np.all(np.isfinite(self.entries)):
            raise NumericError(f"non-finite tensor entries at {self.point}")

    @property
    def rank(self) -> int:
        return self.entries.ndim

    @property
    def dims(self) -> tuple[int, ...]:
        return self.entries.shape

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


def covariant_derivative(T, christoffel) -> Jet | np.ndarray:
    """``nabla T`` of an all-covariant tensor jet, derivative index first.

    ``T`` must carry at least order one; ``christoffel`` is ``Gamma^l_ab``.
    """
    rank = len(T.shape)
    letters = "abcdefgh"[: rank]
    d = "p"
    out = T.grad()
    for s in range(rank):
        inner = letters[:s] + "q" + letters[s + 1:]
        corr = jets.einsum(f"q{d}{letters[s]},{inner}->{d}{letters}", christoffel, T)
        out = out - corr
    return out


class Geometry:
    """Curvature quantities of ``g`` at one point, stored as jets.

    A metric jet of order K yields Christoffel symbols of order K-1 and
    curvature of order K-2, i.e. ``K - 2`` further covariant derivatives of
    the curvature are available exactly.
    """

    def __init__(self, g: MetricField, point: Sequence[float], order: int):
        self.metric_field = g
        self.point = _check_point(g.chart, point)
        self.order = order
        self.n = g.chart.dim
        self.coords = Jet.variables(self.point, order)
        self.g = metric_jet(g, self.point, order)

    @cached_property
    def g_inv(self) -> Jet:
        return jets.inv(self.g)

    @property
    def g0(self) -> np.ndarray:
        return self.g.value

    @property
    def g0_inv(self) -> np.ndarray:
        return self.g_inv.value

    @cached_property
    def christoffel(self) -> Jet:
        dg = self.g.grad()  # dg[k, i, j] = d_k g_ij
        first_kind = 0.5 * (
            jets.einsum("ijl->lij", dg) + jets.einsum("jil->lij", dg) - dg
        )
        return jets.einsum("kl,lij->kij", self.g_inv, first_kind)

    @cached_property
    def riemann_up(self) -> Jet:
        gam = self.christoffel
        dgam = gam.grad()  # dgam[a, l, j, k] = d_a Gamma^l_jk
        quad = jets.einsum("lim,mjk->lijk", gam, gam)
        return (
            jets.einsum("iljk->lijk", dgam)
            - jets.einsum("jlik->lijk", dgam)
            + quad
            - jets.einsum("ljik->lijk", quad)
        )

    @cached_property
    def riemann(self) -> Jet:
        return jets.einsum("km,mijl->ijkl", self.g, self.riemann_up)

    @cached_property
    def ricci(self) -> Jet:
        return jets.einsum("iijk->jk", self.riemann_up)

    @cached_property
    def scalar(self) -> Jet:
        return jets.einsum("jk,jk->", self.g_inv, self.ricci)

    @cached_property
    def nabla_ricci(self) -> Jet:
        return covariant_derivative(self.ricci, self.christoffel)

    @cached_property
    def grad_scalar(self) -> Jet:
        return self.scalar.grad()

    @cached_property
    def hessian_scalar(self) -> Jet:
        return hessian_jet(self, self.scalar)

    def field_jet(self, f: ScalarField) -> Jet:
        if f.chart.dim != self.n:
            raise DomainError("scalar field and metric live on different charts")
        return f.jet(self.coords)


def hessian_jet(geom: Geometry, f: Jet) -> Jet:
    """``nabla^2 f`` as a jet (two orders below ``f``)."""
    df = f.grad()
    return df.grad() - jets.einsum("kij,k->ij", geom.christoffel, df)


@lru_cache(maxsize=512)
def _geometry(g: MetricField, point: tuple[float, ...], order: int) -> Geometry:
    return Geometry(g, point, order)


def geometry(g: MetricField, point: Sequence[float], order: int = 4) -> Geometry:
    """Cached curvature stack built from a metric jet of the given order."""
    return _geometry(g, tuple(float(x) for x in point), order)


def _tv(x, variance: str, point) -> TensorValue:
    return TensorValue(np.array(jets.value(x), dtype=float), variance, tuple(point))


def christoffel(g: MetricField, point) -> TensorValue:
    geom = geometry(g, point, 1)
    return _tv(geom.christoffel, "udd", geom.point)


def riemann(g: MetricField, point) -> TensorValue:
    geom = geometry(g, point, 2)
    return _tv(geom.riemann, "dddd", geom.point)


def ricci(g: MetricField, point) -> TensorValue:
    geom = geometry(g, point, 2)
    return _tv(geom.ricci, "dd", geom.point)


def scalar_curvature(g: MetricField, point) -> float:
    return float(geometry(g, point, 2).scalar.value)


def gradient(g: MetricField, f: ScalarField, point) -> TensorValue:
    """Differential ``df`` (covariant components)."""
    geom = geometry(g, point, 1)
    return _tv(geom.field_jet(f).grad(), "d", geom.point)


def hessian(g: MetricField, f: ScalarField, point) -> TensorValue:
    geom = geometry(g, point, 2)
    return _tv(hessian_jet(geom, geom.field_jet(f)), "dd", geom.point)


def laplacian(g: MetricField, f: ScalarField, point) -> float:
    geom = geometry(g, point, 2)
    H = hessian_jet(geom, geom.field_jet(f)).value
    return float(np.einsum("ij,ij->", geom.g0_inv, H))


def grad_norm2(g: MetricField, f: ScalarField, point) -> float:
    geom = geometry(g, point, 1)
    df = geom.field_jet(f).grad().value
    return float(df @ geom.g0_inv @ df)


def covariant_derivative_ricci(g: MetricField, point) -> TensorValue:
    geom = geometry(g, point, 3)
    return _tv(geom.nabla_ricci, "ddd", geom.point)


def first_bianchi_residual(Rm: np.ndarray) -> float:
    cyc = Rm + np.einsum("ijkl->jkil", Rm) + np.einsum("ijkl->kijl", Rm)
    return float(np.abs(cyc).max())


def riemann_symmetry_residual(Rm: np.ndarray) -> float:
    return max(
        float(np.abs(Rm + np.einsum("ijkl->jikl", Rm)).max()),
        float(np.abs(Rm + np.einsum("ijkl->ijlk", Rm)).max()),
        float(np.abs(Rm - np.einsum("ijkl->klij", Rm)).max()),
        first_bianchi_residual(Rm),
    )


# warped products -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class WarpedSpec:
    """``B x_phi F`` with ``g = g_B + phi^2 g_F`` and ``Ric_F = c g_F``.

    When ``base_warped`` is given the base Ricci tensor is itself taken from
    the oracle (recursively); otherwise it comes from the generic stack on
    the lower-dimensional base.  Coordinates of the total chart are the base
    coordinates followed by the fiber ones.
    """

    base_metric: MetricField
    warping: ScalarField
    fiber: MetricField
    fiber_einstein: float
    base_warped: "WarpedSpec | None" = None

    @property
    def base_dim(self) -> int:
        return self.base_metric.chart.dim


def warped_ricci_oracle(spec: WarpedSpec, point) -> TensorValue:
    """Ricci tensor of a warped product from base data and the fiber constant.

    Ric(X,Y) = Ric_B(X,Y) - (f/phi) Hess_B phi(X,Y), Ric(X,V) = 0,
    Ric(V,W) = (c - phi Lap_B phi - (f-1)|grad phi|^2) g_F(V,W),
    with f the fiber dimension.
    """
    pt = tuple(float(x) for x in point)
    b = spec.base_dim
    xb, xf = pt[:b], pt[b:]
    base = spec.base_metric
    if spec.base_warped is not None:
        ric_b = warped_ricci_oracle(spec.base_warped, xb).entries
    else:
        ric_b = ricci(base, xb).entries if b > 1 else np.zeros((1, 1))
    phi = geometry(base, xb, 2).field_jet(spec.warping).value
    if phi <= 0:
        raise DomainError(f"warping function must be positive, got {phi} at {xb}")
    hess_phi = hessian(base, spec.warping, xb).entries
    lap_phi = laplacian(base, spec.warping, xb)
    grad2 = grad_norm2(base, spec.warping, xb)
    f = spec.fiber.chart.dim
    gf = metric_jet(spec.fiber, xf, 0).value
    n = b + f
    out = np.zeros((n, n))
    out[:b, :b] = ric_b - (f / phi) * hess_phi
    out[b:, b:] = (spec.fiber_einstein - phi * lap_phi - (f - 1) * grad2) * gf
    return TensorValue(out, "dd", pt)
