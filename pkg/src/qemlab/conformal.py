"""Schouten, Weyl, Cotton and the quasi-Einstein tensors T, D, P, Q.

Index placement follows :mod:`qemlab.curvature`.  Contractions written as
``W_ijkl nabla_l u`` in orthonormal-frame notation are taken with the
inverse metric: ``W_ijkl g^la d_a u``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property, lru_cache
from typing import Sequence

import numpy as np

from . import jets
from .charts import MetricField, ScalarField
from .curvature import Geometry, TensorValue, covariant_derivative, geometry, hessian_jet
from .errors import DimensionError, ParamError, ShapeError
from .jets import Jet


def kn(alpha, beta):
    """Kulkarni-Nomizu product of two symmetric 2-tensors (arrays or jets)."""
    return (
        jets.einsum("ik,jl->ijkl", alpha, beta)
        + jets.einsum("jl,ik->ijkl", alpha, beta)
        - jets.einsum("il,jk->ijkl", alpha, beta)
        - jets.einsum("jk,il->ijkl", alpha, beta)
    )


def kulkarni_nomizu(alpha, beta) -> TensorValue:
    a = np.asarray(getattr(alpha, "entries", alpha), dtype=float)
    b = np.asarray(getattr(beta, "entries", beta), dtype=float)
    if a.ndim != 2 or a.shape != b.shape or a.shape[0] != a.shape[1]:
        raise ShapeError(f"need two square matrices of equal size, got {a.shape} and {b.shape}")
    point = getattr(alpha, "point", getattr(beta, "point", ()))
    return TensorValue(kn(a, b), "dddd", point)


def _need_dim3(n: int, what: str) -> None:
    if n < 3:
        raise DimensionError(f"{what} is defined for n >= 3, got n = {n}")


def schouten_of(geom: Geometry, order: int | None = None):
    n = geom.n
    _need_dim3(n, "the Schouten tensor")
    return geom.ricci - geom.scalar * geom.g / (2 * (n - 1))


def weyl_of(geom: Geometry):
    n = geom.n
    _need_dim3(n, "the Weyl tensor")
    return geom.riemann - kn(schouten_of(geom), geom.g) / (n - 2)


def cotton_of(geom: Geometry):
    """``C_ijk = nabla_i A_jk - nabla_j A_ik`` with A the Schouten tensor."""
    n = geom.n
    _need_dim3(n, "the Cotton tensor")
    dric = geom.nabla_ricci.value
    dR = geom.grad_scalar.value
    g = geom.g0
    return (
        dric - np.einsum("jik->ijk", dric)
        - (np.einsum("i,jk->ijk", dR, g) - np.einsum("j,ik->ijk", dR, g)) / (2 * (n - 1))
    )


def weyl_divergence(geom: Geometry) -> np.ndarray:
    """``g^la nabla_a W_ijkl``."""
    dW = covariant_derivative(weyl_of(geom), geom.christoffel).value
    return np.einsum("la,aijkl->ijk", geom.g0_inv, dW)


def schouten(g: MetricField, point) -> TensorValue:
    geom = geometry(g, point, 2)
    return TensorValue(np.array(jets.value(schouten_of(geom))), "dd", geom.point)


def weyl(g: MetricField, point) -> TensorValue:
    geom = geometry(g, point, 2)
    return TensorValue(np.array(jets.value(weyl_of(geom))), "dddd", geom.point)


def cotton(g: MetricField, point) -> TensorValue:
    geom = geometry(g, point, 3)
    return TensorValue(cotton_of(geom), "ddd", geom.point)


def traceless_ricci(g: MetricField, point) -> TensorValue:
    geom = geometry(g, point, 2)
    R = geom.scalar.value
    return TensorValue(geom.ricci.value - R / geom.n * geom.g0, "dd", geom.point)


def norm2(T: np.ndarray, g_inv: np.ndarray) -> float:
    """Full contraction ``|T|^2`` of an all-covariant tensor."""
    U = T
    for axis in range(T.ndim):
        U = np.moveaxis(np.tensordot(g_inv, U, axes=([1], [axis])), 0, axis)
    return float(np.sum(U * T))


@dataclass(frozen=True, eq=False)
class QEStructure:
    """Metric, potential and constants of a candidate m-quasi-Einstein manifold."""

    g: MetricField
    u: ScalarField
    m: float
    lam: float
    name: str = ""

    def __post_init__(self):
        if not self.m > 0:
            raise ParamError(f"m must be positive, got {self.m}")
        if self.u.chart.dim != self.g.chart.dim:
            raise ParamError("potential and metric must share a chart")

    @property
    def n(self) -> int:
        return self.g.chart.dim

    @property
    def k(self) -> float:
        return self.lam / (self.m + self.n - 1)

    def rho(self, R: float) -> float:
        if self.m == 1:
            raise ParamError("rho requires m > 1")
        return ((self.n - 1) * self.lam - R) / (self.m - 1)

    def with_lambda(self, lam: float) -> "QEStructure":
        return replace(self, lam=lam)

    def with_potential_shift(self, shift: float) -> "QEStructure":
        u = self.u
        return replace(self, u=ScalarField(u.chart, lambda x: u.jet(x) + shift, u.name))

    def rescaled(self, c: float) -> "QEStructure":
        """``g -> c^2 g``, ``lambda -> lambda / c^2``, u unchanged."""
        return replace(self, g=self.g.scaled(c * c), lam=self.lam / (c * c))


class QEPoint:
    """All quantities of a QE structure needed at one point, as plain arrays.

    Built on a metric jet of order 4, so first derivatives of the curvature
    and second derivatives of the scalar curvature are exact.
    """

    def __init__(self, qe: QEStructure, point: Sequence[float], order: int = 4):
        self.qe = qe
        self.geom = geometry(qe.g, point, order)
        self.point = self.geom.point
        self.n = qe.n
        self.m = qe.m
        self.lam = qe.lam
        self.u_jet = self.geom.field_jet(qe.u)

    # basic fields --------------------------------------------------------
    @cached_property
    def g(self) -> np.ndarray:
        return self.geom.g0

    @cached_property
    def g_inv(self) -> np.ndarray:
        return self.geom.g0_inv

    @cached_property
    def u(self) -> float:
        return float(self.u_jet.value)

    @cached_property
    def du(self) -> np.ndarray:
        return self.u_jet.grad().value

    @cached_property
    def du_up(self) -> np.ndarray:
        return self.g_inv @ self.du

    @cached_property
    def grad_u2(self) -> float:
        return float(self.du @ self.du_up)

    @cached_property
    def hess_u(self) -> np.ndarray:
        return hessian_jet(self.geom, self.u_jet).value

    @cached_property
    def lap_u(self) -> float:
        return float(np.einsum("ij,ij->", self.g_inv, self.hess_u))

    @cached_property
    def ric(self) -> np.ndarray:
        return self.geom.ricci.value

    @cached_property
    def R(self) -> float:
        return float(self.geom.scalar.value)

    @cached_property
    def dR(self) -> np.ndarray:
        return self.geom.grad_scalar.value

    @cached_property
    def lap_R(self) -> float:
        return float(np.einsum("ij,ij->", self.g_inv, self.geom.hessian_scalar.value))

    @cached_property
    def rm(self) -> np.ndarray:
        return self.geom.riemann.value

    @cached_property
    def nabla_ric(self) -> np.ndarray:
        return self.geom.nabla_ricci.value

    @cached_property
    def ric_du(self) -> np.ndarray:
        """``Ric(grad u)`` as a covector."""
        return self.ric @ self.du_up

    @cached_property
    def traceless_ric(self) -> np.ndarray:
        return self.ric - self.R / self.n * self.g

    @cached_property
    def mu(self) -> float:
        return self.u * self.lap_u + (self.m - 1) * self.grad_u2 + self.lam * self.u**2

    # QE tensors ---------------------------------------------------------
    @cached_property
    def rho(self) -> float:
        return self.qe.rho(self.R)

    @cached_property
    def p_jet(self) -> Jet:
        geom = self.geom
        rho = ((self.n - 1) * self.lam - geom.scalar) / (self.m - 1)
        return geom.ricci - rho * geom.g

    @cached_property
    def P(self) -> np.ndarray:
        return self.p_jet.value

    @cached_property
    def nabla_p(self) -> np.ndarray:
        return covariant_derivative(self.p_jet, self.geom.christoffel).value

    @cached_property
    def Q(self) -> np.ndarray:
        n, m, lam, R = self.n, self.m, self.lam, self.R
        c = ((n - m) * lam - R) / (2 * m * (m - 1))
        return self.rm + kn(self.P, self.g) / m + c * kn(self.g, self.g)

    @cached_property
    def W(self) -> np.ndarray:
        return np.asarray(jets.value(weyl_of(self.geom)))

    @cached_property
    def C(self) -> np.ndarray:
        return cotton_of(self.geom)

    @cached_property
    def T(self) -> np.ndarray:
        return t_tensor_from(self.n, self.m, self.lam, self.u, self.du, self.du_up,
                             self.ric, self.R, self.dR, self.g)

    @cached_property
    def D(self) -> np.ndarray:
        df = -self.m * self.du / self.u
        return d_tensor_from(self.n, df, self.g_inv @ df, self.ric, self.R, self.g)


def t_tensor_from(n, m, lam, u, du, du_up, ric, R, dR, g) -> np.ndarray:
    _need_dim3(n, "the T tensor")
    ric_du = ric @ du_up
    a = (m + n - 2) / (n - 2)
    b = m / (n - 2)
    c = ((n - 1) * (n - 2) * lam + m * R) / ((n - 1) * (n - 2))
    d = u / (2 * (n - 1))
    return (
        a * (np.einsum("ik,j->ijk", ric, du) - np.einsum("jk,i->ijk", ric, du))
        + b * (np.einsum("j,ik->ijk", ric_du, g) - np.einsum("i,jk->ijk", ric_du, g))
        + c * (np.einsum("i,jk->ijk", du, g) - np.einsum("j,ik->ijk", du, g))
        - d * (np.einsum("i,jk->ijk", dR, g) - np.einsum("j,ik->ijk", dR, g))
    )


def d_tensor_from(n, df, df_up, ric, R, g) -> np.ndarray:
    _need_dim3(n, "the D tensor")
    ric_df = ric @ df_up
    return (
        (np.einsum("jk,i->ijk", ric, df) - np.einsum("ik,j->ijk", ric, df)) / (n - 2)
        + (np.einsum("i,jk->ijk", ric_df, g) - np.einsum("j,ik->ijk", ric_df, g))
        / ((n - 1) * (n - 2))
        - R * (np.einsum("jk,i->ijk", g, df) - np.einsum("ik,j->ijk", g, df))
        / ((n - 1) * (n - 2))
    )


@lru_cache(maxsize=1024)
def _qe_point(qe: QEStructure, point: tuple[float, ...], order: int) -> QEPoint:
    return QEPoint(qe, point, order)


def qe_point(qe: QEStructure, point, order: int = 4) -> QEPoint:
    return _qe_point(qe, tuple(float(x) for x in point), order)


def t_tensor(qe: QEStructure, point) -> TensorValue:
    q = qe_point(qe, point)
    return TensorValue(q.T, "ddd", q.point)


def d_tensor(qe: QEStructure, point) -> TensorValue:
    q = qe_point(qe, point)
    return TensorValue(q.D, "ddd", q.point)


def p_tensor(qe: QEStructure, point) -> TensorValue:
    if qe.m <= 1:
        raise ParamError("the P tensor requires m > 1")
    q = qe_point(qe, point)
    return TensorValue(q.P, "dd", q.point)


def q_tensor(qe: QEStructure, point) -> TensorValue:
    if qe.m <= 1:
        raise ParamError("the Q tensor requires m > 1")
    q = qe_point(qe, point)
    return TensorValue(q.Q, "dddd", q.point)
