"""Scalar-curvature spectrum, T-flat dichotomy and the case matcher."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.linalg import eigh

from .conformal import QEPoint, QEStructure, norm2, qe_point
from .errors import DimensionError, InconsistencyError, NotApplicable, ParamError

EINSTEIN_TOL = 1e-10
T_FLAT_TOL = 1e-10
BRANCH_TOL = 1e-8
KAPPA_RTOL = 1e-6
EIGEN_GAP = 1e-6
PRODUCT_TOL = 1e-7
CONSTANT_R_SPREAD = 1e-8

EINSTEIN_BRANCH = "Einstein-branch"
PRODUCT_BRANCH = "(n-1)lambda-branch"
NEITHER = "neither"


def _fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(x).limit_denominator(10**9) if isinstance(x, float) else Fraction(x)


@dataclass(frozen=True)
class SpectrumRow:
    kappa: int
    coefficient: Fraction  # R_kappa = coefficient * lambda

    def value(self, lam) -> Fraction:
        return self.coefficient * _fraction(lam)


@dataclass(frozen=True)
class SpectrumTable:
    n: int
    m: Fraction
    lam: Fraction
    rows: tuple[SpectrumRow, ...]

    def value(self, kappa: int) -> Fraction:
        return self.rows[kappa].value(self.lam)

    def values(self) -> list[Fraction]:
        return [r.value(self.lam) for r in self.rows]

    def nearest(self, R: float, rtol: float = KAPPA_RTOL) -> int | None:
        """κ of the row closest to ``R`` if within relative tolerance."""
        dists = [abs(float(v) - R) for v in self.values()]
        k = int(np.argmin(dists))
        return k if dists[k] <= rtol * max(1.0, abs(R)) else None


def spectrum_coefficient(n: int, m, kappa: int) -> Fraction:
    m = _fraction(m)
    den = m + n - kappa - 1
    if den == 0:
        raise ParamError(f"degenerate denominator m + n - kappa - 1 = 0 at kappa = {kappa}")
    return (kappa * (m - n) + n * (n - 1)) / den


def admissible_spectrum(n: int, m, lam) -> SpectrumTable:
    """Rows ``R_kappa = (kappa (m - n) + n (n - 1)) / (m + n - kappa - 1) * lambda``.

    ``m`` and ``lam`` may be ints, Fractions, decimal strings or floats
    (floats are converted exactly up to a 1e-9 denominator bound).
    """
    if n < 2:
        raise ParamError(f"n >= 2 required, got {n}")
    mf, lf = _fraction(m), _fraction(lam)
    if not mf > 1:
        raise ParamError(f"m > 1 required, got {m}")
    if not lf < 0:
        raise ParamError(f"lambda < 0 required, got {lam}")
    rows = tuple(SpectrumRow(k, spectrum_coefficient(n, mf, k)) for k in range(n + 1))
    return SpectrumTable(n, mf, lf, rows)


def render_rational(c: Fraction) -> str:
    return f"{c.numerator}/{c.denominator}·λ"


# T-flatness ---------------------------------------------------------------

def _points(qe, points) -> list[QEPoint]:
    return [qe_point(qe, p) for p in np.atleast_2d(np.asarray(points, dtype=float))]


def _require_constant_R(qs) -> float:
    Rs = np.array([q.R for q in qs])
    if Rs.max() - Rs.min() > CONSTANT_R_SPREAD:
        raise NotApplicable(f"scalar curvature is not constant (spread {Rs.max() - Rs.min():.3e})")
    return float(Rs.mean())


def normalized_t_norm(q: QEPoint) -> float:
    scale = (np.abs(q.ric).max() + abs(q.lam) + abs(q.R)) ** 2 * q.grad_u2 \
        + q.u**2 * float(q.dR @ q.g_inv @ q.dR)
    return norm2(q.T, q.g_inv) / (1.0 + scale)


def ricci_eigenvalues(q: QEPoint) -> np.ndarray:
    return eigh(q.ric, q.g, eigvals_only=True)


def group_eigenvalues(vals, gap: float = EIGEN_GAP) -> list[tuple[float, int]]:
    """Sorted ``(value, multiplicity)`` groups split at relative gaps."""
    vals = np.sort(np.asarray(vals, dtype=float))
    groups: list[list[float]] = [[vals[0]]]
    for v in vals[1:]:
        ref = groups[-1][-1]
        if abs(v - ref) <= gap * max(1.0, abs(v), abs(ref)):
            groups[-1].append(v)
        else:
            groups.append([v])
    return [(float(np.mean(g)), len(g)) for g in groups]


def branch_of(n: int, m: float, lam: float, R: float, einstein: bool) -> str:
    e = n * (n - 1) * lam / (m + n - 1)
    p = (n - 1) * lam
    tol = BRANCH_TOL * (1 + abs(R))
    on_e, on_p = abs(R - e) <= tol, abs(R - p) <= tol
    if on_e and on_p:
        return EINSTEIN_BRANCH if einstein else PRODUCT_BRANCH
    if on_e:
        return EINSTEIN_BRANCH
    if on_p:
        return PRODUCT_BRANCH
    return NEITHER


@dataclass(frozen=True)
class TFlatResult:
    is_t_flat: bool
    which_branch: str
    max_t_norm: float
    R: float
    branch_values: tuple[float, float]
    ricci_groups: tuple[tuple[float, int], ...]
    at_most_two_eigenvalues: bool

    def __iter__(self):
        return iter((self.is_t_flat, self.which_branch))


def t_flat_test(qe: QEStructure, points) -> TFlatResult:
    if qe.n < 3:
        raise DimensionError("the T tensor is defined for n >= 3")
    qs = _points(qe, points)
    R = _require_constant_R(qs)
    t = max(normalized_t_norm(q) for q in qs)
    flat = t <= T_FLAT_TOL
    einstein = max(norm2(q.traceless_ric, q.g_inv) for q in qs) / (1 + R * R) <= EINSTEIN_TOL
    n, m, lam = qe.n, qe.m, qe.lam
    branch = branch_of(n, m, lam, R, einstein)
    if flat != (branch != NEITHER):
        raise InconsistencyError(
            f"|T|^2 test says {'flat' if flat else 'not flat'} (max {t:.3e}) "
            f"but R = {R!r} lies on branch {branch}")
    groups = tuple(group_eigenvalues(ricci_eigenvalues(qs[0])))
    return TFlatResult(bool(flat), branch, t, R,
                       (n * (n - 1) * lam / (m + n - 1), (n - 1) * lam),
                       groups, len(groups) <= 2)


# three-dimensional eigenstructure -------------------------------------------

@dataclass(frozen=True)
class Eigenstructure3D:
    mu2: float
    mu3: float
    rho: float
    checks: dict = field(default_factory=dict)
    route: str = ""


def orthonormal_frame(g: np.ndarray, first: np.ndarray) -> np.ndarray:
    """Columns form a g-orthonormal frame whose first vector is ``first``."""
    n = len(g)
    vecs = [first] + [np.eye(n)[i] for i in range(n)]
    frame: list[np.ndarray] = []
    for v in vecs:
        w = v.astype(float).copy()
        for e in frame:
            w = w - (e @ g @ w) * e
        nw = math.sqrt(max(float(w @ g @ w), 0.0))
        if nw > 1e-8:
            frame.append(w / nw)
        if len(frame) == n:
            break
    return np.column_stack(frame)


def route_3d(mu2: float, mu3: float, rho: float, lam: float, m: float,
             tol: float = PRODUCT_TOL) -> str:
    """Branch of the three-dimensional argument selected by the P eigenvalues."""
    if abs(mu2 * mu3) <= tol * (1 + abs(lam)) ** 2:
        return "parallel-ricci-einstein"
    tr = 2 * lam - (m + 2) * rho
    disc = 4 * m * rho * tr**2
    if rho > tol or disc < -tol:
        return "inadmissible"
    if abs(rho) <= tol:
        return "rho-zero-product"
    if abs(rho - 2 * lam / (m + 2)) <= tol:
        return "contradiction"
    return "inadmissible"


def eigenstructure_3d(qe: QEStructure, point, constant_R_points=None) -> Eigenstructure3D:
    if qe.n != 3:
        raise DimensionError("eigenstructure_3d requires n = 3")
    if qe.m <= 1:
        raise ParamError("m > 1 required")
    sample = constant_R_points if constant_R_points is not None else [point]
    _require_constant_R(_points(qe, sample))
    q = qe_point(qe, point)
    gnorm = math.sqrt(q.grad_u2)
    if gnorm <= 1e-8:
        raise NotApplicable(f"grad u vanishes at {q.point}")
    E = orthonormal_frame(q.g, -q.du_up / gnorm)
    Pf = E.T @ q.P @ E
    block = Pf[1:, 1:]
    mu2, mu3 = np.sort(np.linalg.eigvalsh(0.5 * (block + block.T)))
    lam, m, rho = q.lam, q.m, q.rho
    tr = 2 * lam - (m + 2) * rho
    alpha = tr * (lam - (m + 1) * rho)
    scale = 1 + tr * tr + abs(alpha)
    checks = {
        "p_e1_residual": float(np.abs(Pf[0]).max() / (1 + np.abs(Pf).max())),
        "trace_residual": abs(mu2 + mu3 - tr) / (1 + abs(tr)),
        "product_residual": abs(2 * mu2 * mu3 - alpha) / scale,
        "poly_residual": abs(2 * mu3**2 + alpha - 2 * mu3 * tr) / scale,
        "discriminant": 4 * m * rho * tr**2,
        "scalar_relation_residual": abs(q.R - (2 * lam - (m - 1) * rho)) / (1 + abs(q.R)),
    }
    checks["passed"] = all(checks[k] <= PRODUCT_TOL for k in
                           ("p_e1_residual", "trace_residual", "product_residual",
                            "poly_residual", "scalar_relation_residual"))
    return Eigenstructure3D(float(mu2), float(mu3), float(rho), checks,
                            route_3d(mu2, mu3, rho, lam, m))


# the case matcher ----------------------------------------------------------------

_T_FLAT_LAMBDA_NEG = {  # (einstein, mu sign) -> (ThmA, ThmB, surface)
    (True, -1): ("i", "iv", "iv"),
    (True, 1): ("ii", "v", "ii"),
    (True, 0): ("iv", "vi", "iii"),
    (False, -1): ("v", "vii", None),
    (False, 0): ("v", "viii", None),
    (False, 1): ("iii", "ix", None),
}
_RIGID = {1: "d", 0: "e", -1: "f"}


@dataclass(frozen=True)
class ClassificationReport:
    matched_case: str
    kappa: int | None
    invariants: dict
    thm_b_case: str
    diagnostics: dict = field(default_factory=dict)
    assumptions: str = ("simple connectedness and completeness are not checkable numerically; "
                        "labels match invariant signatures only")


def _sign(x: float, tol: float) -> int:
    return 0 if abs(x) <= tol else (1 if x > 0 else -1)


def _label(n: int, thm_a, thm_b, surface) -> str:
    if n == 2:
        return f"Surface({surface})" if surface else "no match"
    if n == 3 and thm_a:
        return f"ThmA({thm_a})"
    return f"ThmB({thm_b})" if thm_b else "no match"


def classify(qe: QEStructure, points) -> ClassificationReport:
    """Match invariant signatures against the catalogued case lists.

    Deterministic and order independent: every statistic is a max, min or
    mean over the sample set.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    pts = pts[np.lexsort(pts.T[::-1])]
    qs = _points(qe, pts)
    n, m, lam = qe.n, qe.m, qe.lam
    Rs = np.array([q.R for q in qs])
    if Rs.max() - Rs.min() > CONSTANT_R_SPREAD:
        return ClassificationReport("NonConstantR", None,
                                    {"R_min": float(Rs.min()), "R_max": float(Rs.max())},
                                    "not applicable")
    R = float(Rs.mean())
    mus = np.array([q.mu for q in qs])
    mu = float(mus.mean())
    mu_sign = _sign(mu, 1e-8 * (1 + abs(lam)))
    ricc2 = max(norm2(q.traceless_ric, q.g_inv) for q in qs)
    einstein = ricc2 / (1 + R * R) <= EINSTEIN_TOL
    groups = tuple(group_eigenvalues(ricci_eigenvalues(qs[0])))
    along = qs[0].ric_du @ qs[0].du_up / qs[0].grad_u2 if qs[0].grad_u2 > 1e-16 else float("nan")
    inv = {
        "n": n, "m": m, "lambda": lam, "R": R, "mu": mu, "mu_sign": mu_sign,
        "traceless_ricci_norm2": ricc2, "einstein": einstein,
        "ricci_eigenvalues": [list(g) for g in groups],
        "ricci_along_grad_u": float(along),
    }
    diag: dict = {}
    lam_sign = _sign(lam, 1e-12)
    t_flat: bool | None = None
    if n >= 3:
        tf = t_flat_test(qe, pts)
        t_flat = bool(tf.is_t_flat)
        inv.update(t_norm_max=tf.max_t_norm, t_flat=t_flat, branch=tf.which_branch,
                   at_most_two_ricci_eigenvalues=tf.at_most_two_eigenvalues)
        diag["branch_values"] = list(tf.branch_values)

    kappa = None
    if lam_sign < 0 and mu_sign < 0 and m > 1:
        table = admissible_spectrum(n, m, lam)
        kappa = table.nearest(R)
        vals = [float(v) for v in table.values()]
        diag["spectrum"] = vals
        if kappa is None:
            diag["nearest_kappa"] = int(np.argmin([abs(v - R) for v in vals]))

    case = "no match"
    thm_b_item = None
    if lam_sign > 0:
        if einstein:
            case, thm_b_item = _label(n, None, "i", "hemisphere"), "i"
        elif t_flat:
            case, thm_b_item = _label(n, None, "ii", None), "ii"
    elif lam_sign == 0:
        if einstein:
            case, thm_b_item = _label(n, "vi", "iii", "i"), "iii"
    else:
        key = (einstein, mu_sign)
        if (t_flat or (n == 2 and einstein)) and key in _T_FLAT_LAMBDA_NEG:
            items = _T_FLAT_LAMBDA_NEG[key]
            case, thm_b_item = _label(n, *items), items[1]
        elif not t_flat and not einstein and len(groups) == 2 and m > 1:
            rho = ((n - 1) * lam - R) / (m - 1)
            mult = {_close(v, lam): c for v, c in groups}
            if True in mult and any(_close(v, rho) for v, _ in groups):
                case = f"PropRigid({_RIGID[mu_sign]})"
                diag["rigid_split"] = {"lambda_multiplicity": mult[True], "rho": rho}
    if n < 3:
        thm_b = "not applicable (n = 2)"
    elif thm_b_item is not None:
        thm_b = f"ThmB({thm_b_item})"
    else:
        thm_b = "no match among T-flat cases" if t_flat is False else "no match"
    return ClassificationReport(case, kappa, inv, thm_b, diag)


def _close(a: float, b: float) -> bool:
    return abs(a - b) <= EIGEN_GAP * max(1.0, abs(a), abs(b))
