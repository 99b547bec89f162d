"""Pointwise residual checks of the quasi-Einstein system and its consequences.

Each check evaluates both sides of an identity at sample points and reports
the largest normalized residual ``max|lhs - rhs| / (1 + largest term)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .conformal import QEPoint, QEStructure, kn, norm2, qe_point, weyl_divergence
from .curvature import WarpedSpec, geometry, ricci, riemann_symmetry_residual, warped_ricci_oracle
from .charts import MetricField

DEFAULT_TOL = 1e-7
CONSTANT_R_SPREAD = 1e-8
BOUNDARY_U = 1e-8
CRITICAL_GRAD = 1e-10

PASS, FAIL, NOT_APPLICABLE = "pass", "fail", "not_applicable"


@dataclass(frozen=True)
class IdentityReport:
    identity_id: str
    points_checked: int
    max_residual: float
    tolerance: float
    status: str
    note: str = ""
    values: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status != FAIL

    @property
    def failure_kind(self) -> str | None:
        """TOLERANCE when the residual would pass the default threshold."""
        if self.status != FAIL:
            return None
        return "TOLERANCE" if self.max_residual <= DEFAULT_TOL else "IDENTITY"


def residual(lhs, rhs, *terms) -> float:
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    scale = max([np.abs(lhs).max(initial=0.0), np.abs(rhs).max(initial=0.0)]
                + [np.abs(np.asarray(t, dtype=float)).max(initial=0.0) for t in terms])
    return float(np.abs(lhs - rhs).max(initial=0.0) / (1.0 + scale))


def _fold(identity_id: str, residuals: Sequence[float], tol: float, note: str = "",
          values: dict | None = None) -> IdentityReport:
    if not residuals:
        return IdentityReport(identity_id, 0, 0.0, tol, NOT_APPLICABLE,
                              note or "no admissible sample points", values or {})
    worst = float(max(residuals))
    status = PASS if worst <= tol else FAIL
    return IdentityReport(identity_id, len(residuals), worst, tol, status, note, values or {})


def _na(identity_id: str, tol: float, note: str) -> IdentityReport:
    return IdentityReport(identity_id, 0, 0.0, tol, NOT_APPLICABLE, note)


def _points(qe: QEStructure, points) -> list[QEPoint]:
    return [qe_point(qe, p) for p in np.atleast_2d(np.asarray(points, dtype=float))]


def _interior(qs: Iterable[QEPoint]) -> list[QEPoint]:
    return [q for q in qs if q.u >= BOUNDARY_U]


def _contract_last(t: np.ndarray, v_up: np.ndarray) -> np.ndarray:
    return np.tensordot(t, v_up, axes=([-1], [0]))


# the defining system ----------------------------------------------------------

def check_qe_system(qe: QEStructure, points, tol: float = DEFAULT_TOL) -> IdentityReport:
    res = []
    for q in _points(qe, points):
        rhs = q.u / q.m * (q.ric - q.lam * q.g)
        res.append(residual(q.hess_u, rhs, q.u / q.m * q.ric))
    return _fold("hessian_equation", res, tol)


def check_trace(qe: QEStructure, points, tol: float = DEFAULT_TOL) -> IdentityReport:
    res = []
    for q in _points(qe, points):
        res.append(residual(q.lap_u, q.u / q.m * (q.R - q.lam * q.n), q.u * q.R / q.m))
    return _fold("trace_equation", res, tol)


def measured_mu(qe: QEStructure, points) -> np.ndarray:
    return np.array([q.mu for q in _points(qe, points)])


def check_mu_constant(qe: QEStructure, points, tol: float = DEFAULT_TOL) -> IdentityReport:
    if qe.m <= 1:
        return _na("mu_constant", tol, "requires m > 1")
    mus = measured_mu(qe, points)
    spread = float(mus.max() - mus.min())
    res = spread / (1.0 + float(np.abs(mus).max()))
    return IdentityReport("mu_constant", len(mus), res, tol, PASS if res <= tol else FAIL,
                          values={"mu": float(mus.mean()), "mu_spread": spread})


def check_propA(qe: QEStructure, points, tol: float = DEFAULT_TOL) -> list[IdentityReport]:
    """Gradient and Laplacian relations for the scalar curvature."""
    ids = ("scalar_gradient_relation", "scalar_laplacian_relation")
    if qe.n < 3:
        return [_na(i, tol, "stated for n >= 3") for i in ids]
    qs = _points(qe, points)
    grad_res, lap_res = [], []
    for q in qs:
        n, m, lam, R = q.n, q.m, q.lam, q.R
        lhs = 0.5 * q.u * q.dR
        rhs = -(m - 1) * q.ric_du - (R - (n - 1) * lam) * q.du
        grad_res.append(residual(lhs, rhs, (m - 1) * q.ric_du))
    for q in _interior(qs):
        n, m, lam, R = q.n, q.m, q.lam, q.R
        lhs = 0.5 * q.lap_R + (m + 2) / (2 * q.u) * float(q.du_up @ q.dR)
        t1 = -(m - 1) / m * norm2(q.traceless_ric, q.g_inv)
        t2 = -(n + m - 1) / (n * m) * (R - n * lam) * (R - n * (n - 1) / (n + m - 1) * lam)
        lap_res.append(residual(lhs, t1 + t2, t1, t2))
    note = ""
    if _constant_R(qs):
        note = "constant R: reduces to the traceless Ricci norm identity"
    return [_fold(ids[0], grad_res, tol), _fold(ids[1], lap_res, tol, note)]


def _constant_R(qs: Sequence[QEPoint]) -> bool:
    Rs = [q.R for q in qs]
    return bool(Rs) and max(Rs) - min(Rs) <= CONSTANT_R_SPREAD


CONSTANT_R_IDS = ("ricci_grad_u_eigen", "traceless_ricci_grad_u", "traceless_ricci_norm",
                  "transnormal", "t_norm_closed_form")


@dataclass(frozen=True)
class TransnormalData:
    """``|grad u|^2 = b(u) = c0 + c2 u^2`` and ``Lap u = a(u) = a1 u``."""

    c0: float
    c2: float
    a1: float
    alpha: float

    @classmethod
    def from_constants(cls, n: int, m: float, lam: float, R: float, mu: float) -> "TransnormalData":
        alpha = (R + (m - n) * lam) / (m * (m - 1))
        return cls(mu / (m - 1), -alpha, (R - lam * n) / m, alpha)

    def b(self, u):
        return self.c0 + self.c2 * u * u

    def a(self, u):
        return self.a1 * u


def check_constantR_identities(qe: QEStructure, points, tol: float = DEFAULT_TOL) -> list[IdentityReport]:
    qs = _points(qe, points)
    if qe.m <= 1:
        return [_na(i, tol, "requires m > 1") for i in CONSTANT_R_IDS]
    if not _constant_R(qs):
        return [_na(i, tol, "scalar curvature is not constant on the sample") for i in CONSTANT_R_IDS]
    mu = float(np.mean([q.mu for q in qs]))
    out = {i: [] for i in CONSTANT_R_IDS}
    for q in qs:
        n, m, lam, R = q.n, q.m, q.lam, q.R
        out["ricci_grad_u_eigen"].append(residual(q.ric_du, q.rho * q.du))
        c = (n * (n - 1) * lam - (m + n - 1) * R) / (n * (m - 1))
        out["traceless_ricci_grad_u"].append(residual(q.traceless_ric @ q.du_up, c * q.du))
        rhs = (R - n * lam) * (n * (n - 1) * lam - (m + n - 1) * R) / (n * (m - 1))
        out["traceless_ricci_norm"].append(residual(norm2(q.traceless_ric, q.g_inv), rhs))
        tn = TransnormalData.from_constants(n, m, lam, R, mu)
        out["transnormal"].append(residual(q.grad_u2, tn.b(q.u), tn.c0, tn.c2 * q.u**2))
        if n >= 3:
            lhs = (n - 2) ** 2 / (2 * (m + n - 2) ** 2) * norm2(q.T, q.g_inv)
            theta = m / ((n - 1) * (m - 1) ** 2)
            rhs = theta * (R - (n - 1) * lam) * (n * (n - 1) * lam - (m + n - 1) * R) * q.grad_u2
            out["t_norm_closed_form"].append(residual(lhs, rhs))
    reports = [_fold(i, out[i], tol) for i in CONSTANT_R_IDS[:-1]]
    if qe.n >= 3:
        reports.append(_fold("t_norm_closed_form", out["t_norm_closed_form"], tol))
    else:
        reports.append(_na("t_norm_closed_form", tol, "T is defined for n >= 3"))
    tn = TransnormalData.from_constants(qe.n, qe.m, qe.lam, qs[0].R, mu)
    reports[3] = IdentityReport(**{**reports[3].__dict__,
                                   "values": {"c0": tn.c0, "c2": tn.c2, "alpha": tn.alpha}})
    return reports


AUX_IDS = ("p_kernel", "weighted_laplacian_R", "p_curl", "q_contraction", "p_transport")


def check_lemma_aux(qe: QEStructure, points, tol: float = DEFAULT_TOL) -> list[IdentityReport]:
    """Identities for ``P = Ric - rho g`` and the curvature-type tensor Q."""
    if qe.m <= 1:
        return [_na(i, tol, "requires m > 1") for i in AUX_IDS]
    qs = _points(qe, points)
    const_R = _constant_R(qs)
    out = {i: [] for i in AUX_IDS}
    for q in qs:
        n, m, lam, rho = q.n, q.m, q.lam, q.rho
        P, gi = q.P, q.g_inv
        p_du = P @ q.du_up
        out["p_kernel"].append(residual(p_du, -q.u * q.dR / (2 * (m - 1))))

        lhs = 0.5 * q.u * q.lap_R + (m + 2) / 2 * float(q.du_up @ q.dR)
        trP = float(np.einsum("ij,ij->", gi, P))
        rhs = (m - 1) / m * ((lam - rho) * trP - norm2(P, gi))
        out["weighted_laplacian_R"].append(residual(lhs, rhs))

        curl = q.u * (q.nabla_p - np.einsum("jik->ijk", q.nabla_p))
        Q_du = _contract_last(q.Q, q.du_up)
        gg_p = _contract_last(kn(q.g, q.g), gi @ p_du)
        out["p_curl"].append(residual(curl, m * Q_du + 0.5 * gg_p, m * Q_du))

        if const_R:
            dric = q.nabla_ric
            out["q_contraction"].append(
                residual(Q_du, q.u / m * (dric - np.einsum("jik->ijk", dric))))
            lhs = q.u / m * np.einsum("lij,l->ij", q.nabla_p, q.du_up)
            rhs = (q.u / m) ** 2 * (-(lam - rho) * P + P @ gi @ P) \
                + np.einsum("kijl,k,l->ij", q.Q, q.du_up, q.du_up)
            out["p_transport"].append(residual(lhs, rhs))
    reports = [_fold(i, out[i], tol) for i in AUX_IDS[:3]]
    for i in AUX_IDS[3:]:
        reports.append(_fold(i, out[i], tol) if const_R
                       else _na(i, tol, "requires constant scalar curvature"))
    return reports


LEM1_IDS = ("cotton_weyl_t", "d_t_relation", "traceless_ricci_t_contraction")


def tric_terms(q: QEPoint) -> tuple[float, float, float]:
    """The contraction ``Ric0_ik T_ijk grad_j u``, its expansion, and ``c |T|^2``."""
    n, m, lam, R = q.n, q.m, q.lam, q.R
    gi = q.g_inv
    Ro = q.traceless_ric
    Ro_up = gi @ Ro @ gi
    direct = float(np.einsum("ik,ijk,j->", Ro_up, q.T, q.du_up))
    Rdu = Ro @ q.du_up
    Rdu2 = float(Rdu @ gi @ Rdu)
    expansion = (
        (m + n - 2) / (n - 2) * norm2(Ro, gi) * q.grad_u2
        - (m + n - 2) / (n - 2) * Rdu2
        + (n * (n - 1) * lam - (m + n - 1) * R) / (n * (n - 1)) * float(q.du_up @ Rdu)
        - m / (n - 2) * Rdu2
    )
    closed = (n - 2) / (2 * (m + n - 2)) * norm2(q.T, gi)
    return direct, expansion, closed


def check_lem1_and_tric(qe: QEStructure, points, tol: float = DEFAULT_TOL) -> list[IdentityReport]:
    if qe.n < 3:
        return [_na(i, tol, "requires n >= 3") for i in LEM1_IDS]
    qs = _points(qe, points)
    const_R = _constant_R(qs)
    lem, dt, tric = [], [], []
    for q in qs:
        m, n = q.m, q.n
        W_du = _contract_last(q.W, q.du_up)
        lem.append(residual(q.u * q.C, m * W_du + q.T, m * W_du))
        if q.u >= BOUNDARY_U:
            dt.append(residual(q.T, (m + n - 2) / m * q.u * q.D))
        if const_R:
            direct, expansion, closed = tric_terms(q)
            tric.append(max(residual(direct, expansion), residual(direct, closed)))
    note = "n = 3: W vanishes, so this reads u C = T" if qe.n == 3 else ""
    return [
        _fold(LEM1_IDS[0], lem, tol, note),
        _fold(LEM1_IDS[1], dt, tol),
        _fold(LEM1_IDS[2], tric, tol) if const_R
        else _na(LEM1_IDS[2], tol, "requires constant scalar curvature"),
    ]


# identities of the curvature kernel itself --------------------------------------

KERNEL_IDS = ("riemann_symmetries", "contracted_bianchi", "weyl_decomposition",
              "weyl_trace_free", "cotton_symmetries", "cotton_weyl_divergence")


def check_kernel(g: MetricField, points, tol: float = DEFAULT_TOL) -> list[IdentityReport]:
    from .conformal import cotton_of, schouten_of, weyl_of

    n = g.chart.dim
    out = {i: [] for i in KERNEL_IDS}
    for p in np.atleast_2d(np.asarray(points, dtype=float)):
        geom = geometry(g, p, 4)
        Rm = geom.riemann.value
        gi, g0 = geom.g0_inv, geom.g0
        ric, R = geom.ricci.value, float(geom.scalar.value)
        out["riemann_symmetries"].append(riemann_symmetry_residual(Rm) / (1 + np.abs(Rm).max()))
        dric = geom.nabla_ricci.value
        out["contracted_bianchi"].append(
            residual(2 * np.einsum("ij,ijk->k", gi, dric), geom.grad_scalar.value))
        if n < 3:
            continue
        W = np.asarray(weyl_of(geom).value)
        explicit = (
            W
            + (np.einsum("ik,jl->ijkl", ric, g0) + np.einsum("jl,ik->ijkl", ric, g0)
               - np.einsum("il,jk->ijkl", ric, g0) - np.einsum("jk,il->ijkl", ric, g0)) / (n - 2)
            - R / ((n - 1) * (n - 2))
            * (np.einsum("jl,ik->ijkl", g0, g0) - np.einsum("il,jk->ijkl", g0, g0))
        )
        out["weyl_decomposition"].append(residual(Rm, explicit))
        tr = np.einsum("ik,ijkl->jl", gi, W)
        sym = riemann_symmetry_residual(W)
        w3 = np.abs(W).max() if n == 3 else 0.0
        out["weyl_trace_free"].append(max(np.abs(tr).max(), sym, w3) / (1 + np.abs(Rm).max()))
        C = cotton_of(geom)
        cs = max(np.abs(C + np.einsum("jik->ijk", C)).max(),
                 np.abs(np.einsum("jk,ijk->i", gi, C)).max(),
                 np.abs(np.einsum("ik,ijk->j", gi, C)).max())
        out["cotton_symmetries"].append(cs / (1 + np.abs(dric).max()))
        if n >= 4:
            out["cotton_weyl_divergence"].append(
                residual(C, -(n - 2) / (n - 3) * weyl_divergence(geom)))
    reports = []
    for i in KERNEL_IDS:
        if not out[i]:
            need = "n >= 4" if i == "cotton_weyl_divergence" else "n >= 3"
            reports.append(_na(i, tol, f"requires {need}"))
        else:
            reports.append(_fold(i, out[i], tol))
    return reports


def check_warped_oracle(spec: WarpedSpec, g: MetricField, points,
                        tol: float = DEFAULT_TOL) -> IdentityReport:
    """Generic Ricci tensor against the warped-product formulas."""
    res = []
    for p in np.atleast_2d(np.asarray(points, dtype=float)):
        res.append(residual(ricci(g, p).entries, warped_ricci_oracle(spec, p).entries))
    return _fold("warped_ricci_oracle", res, tol)


def run_all(qe: QEStructure, points, tol: float = DEFAULT_TOL,
            kernel: bool = True) -> list[IdentityReport]:
    """Every check in a fixed order."""
    reports = [
        check_qe_system(qe, points, tol),
        check_trace(qe, points, tol),
        check_mu_constant(qe, points, tol),
        *check_propA(qe, points, tol),
        *check_constantR_identities(qe, points, tol),
        *check_lemma_aux(qe, points, tol),
        *check_lem1_and_tric(qe, points, tol),
    ]
    if kernel:
        reports.extend(check_kernel(qe.g, points, tol))
    return reports


QE_IDENTITY_IDS = ("hessian_equation", "trace_equation", "mu_constant",
                   "scalar_gradient_relation", "scalar_laplacian_relation",
                   *CONSTANT_R_IDS, *AUX_IDS, *LEM1_IDS)

# documented negative controls: each QE identity must fail under this change
# (a potential shift u + c is a genuine solution when lambda = 0 and Ric = 0,
# so only the lambda shift is a universal control)
NEGATIVE_CONTROLS: dict[str, tuple[str, float]] = {i: ("lambda", 0.1) for i in QE_IDENTITY_IDS}
CONTROL_MIN_RESIDUAL = 1e-3


def parse_perturbation(text: str) -> tuple[str, float]:
    """``lambda=+0.1``, ``u=+0.01`` or ``fiber=1.05``."""
    key, sep, val = text.partition("=")
    key = key.strip().lower()
    if not sep or key not in ("lambda", "u", "fiber"):
        raise ValueError(f"perturbation must be lambda=<shift>, u=<shift> or fiber=<factor>: {text!r}")
    return key, float(val)


def perturbed(qe: QEStructure, kind: str, amount: float, rebuild_fiber: Callable | None = None):
    """The structure with one documented perturbation applied.

    ``fiber`` rescales the fiber metric and needs a catalog rebuild callback
    taking the scale factor.
    """
    if kind == "lambda":
        return qe.with_lambda(qe.lam + amount)
    if kind == "u":
        return qe.with_potential_shift(amount)
    if kind == "fiber":
        if rebuild_fiber is None:
            raise ValueError("fiber perturbation needs a catalog entry")
        return rebuild_fiber(amount)
    raise ValueError(f"unknown perturbation {kind!r}")
