"""Closed-form quasi-Einstein geometries, each with its expected invariants.

Every family with negative lambda is built at unit curvature scale
(``k = -1`` for the Einstein families, ``|u''/u| = 1`` for the products
unless ``lambda`` is passed).  The optional ``scale`` parameter ``c`` applies
the exact rescaling ``g -> c^2 g``, ``lambda -> lambda / c^2`` with ``u``
unchanged; all expected values are mapped accordingly.

Fibers: spheres use iterated polar angles, hyperbolic spaces the upper
half-space chart ``(dx_1^2 + ... + dx_q^2) / x_q^2`` and flat factors the
identity chart.  A lambda-Einstein factor N is a rescaled hyperbolic space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

from . import jets
from .charts import ANGLE, FLAT, HALF_PLANE_HEIGHT, RADIAL, Chart, MetricField, ScalarField
from .conformal import QEStructure
from .curvature import WarpedSpec
from .errors import ParamError

HEMISPHERE_RADIAL = (0.1, math.pi / 2 - 0.1)


# metric building blocks -------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Piece:
    """A diagonal metric block, optionally Einstein, optionally warped."""

    chart: Chart
    diag: Callable[[list], list]
    einstein: float | None = None
    warped: WarpedSpec | None = None

    @cached_property
    def metric(self) -> MetricField:
        return MetricField.from_diagonal(self.chart, self.diag)

    @property
    def dim(self) -> int:
        return self.chart.dim


def interval(name: str = "t", domain=RADIAL) -> Piece:
    return Piece(Chart((name,), (domain,)), lambda x: [1.0], 0.0)


def sphere(k: int, scale: float = 1.0, prefix: str = "th") -> Piece:
    """Round S^k of radius sqrt(scale) in polar angles."""
    names = tuple(f"{prefix}{i + 1}" for i in range(k))

    def diag(x):
        out, w = [], 1.0
        for i in range(k):
            out.append(scale * w)
            w = w * jets.sin(x[i]) ** 2
        return out

    return Piece(Chart(names, (ANGLE,) * k), diag, (k - 1) / scale)


def hyperbolic(q: int, scale: float = 1.0, prefix: str = "x") -> Piece:
    """``scale * g_{H^q}``; for q = 1 the real line."""
    if q == 1:
        return Piece(Chart((f"{prefix}1",), (FLAT,)), lambda x: [scale], 0.0)
    names = tuple(f"{prefix}{i + 1}" for i in range(q))
    domain = (FLAT,) * (q - 1) + (HALF_PLANE_HEIGHT,)
    return Piece(Chart(names, domain), lambda x: [scale / x[-1] ** 2] * q, -(q - 1) / scale)


def flat(k: int, prefix: str = "y") -> Piece:
    names = tuple(f"{prefix}{i + 1}" for i in range(k))
    return Piece(Chart(names, (FLAT,) * k), lambda x: [1.0] * k, 0.0)


def warp(base: Piece, phi: Callable | None, fiber: Piece, einstein: float | None = None) -> Piece:
    """``g_B + phi^2 g_F``; ``phi=None`` gives the Riemannian product."""
    if fiber.einstein is None:
        raise ParamError("warped fibers must be Einstein")
    b = base.dim
    phi_fn = phi if phi is not None else (lambda x: 1.0)

    def diag(x):
        w2 = phi_fn(x[:b]) ** 2
        return list(base.diag(x[:b])) + [w2 * e for e in fiber.diag(x[b:])]

    spec = WarpedSpec(
        base_metric=base.metric,
        warping=ScalarField(base.chart, phi_fn, "phi"),
        fiber=fiber.metric,
        fiber_einstein=fiber.einstein,
        base_warped=base.warped,
    )
    return Piece(base.chart + fiber.chart, diag, einstein, spec)


def _radial(fn) -> Callable:
    return lambda x: fn(x[0])


# catalog entries ------------------------------------------------------------

@dataclass(frozen=True)
class Expected:
    lam_sign: int
    mu: float
    R: float
    t_flat: bool | None  # None: T undefined (n = 2)
    einstein: bool
    case_label: str
    kappa: int | None = None


@dataclass(frozen=True, eq=False)
class CatalogEntry:
    id: str
    params: dict
    qe: QEStructure
    expected: Expected
    warped: WarpedSpec | None = None
    notes: tuple[str, ...] = ()
    fiber_sensitive: bool = True  # does fiber_scale break the structure

    @property
    def n(self) -> int:
        return self.qe.n


NOTE_SQRT_K = (
    "For the Einstein families the coefficient of sinh^2 / cosh^2 could be read "
    "as sqrt(-k) or as 1/(-k); dimensional analysis gives 1/(-k). "
    "Entries are built at k = -1, where both readings coincide."
)
NOTE_EXP_POTENTIAL = (
    "The potential C e^{2 sqrt(-k) t} fails the Hessian equation on "
    "dt^2 + e^{2 sqrt(-k) t} g_F; the entry uses u = e^{sqrt(-k) t}."
)
NOTE_COSH_FIBER = (
    "A round sphere fiber in the cosh-warped family does not give an Einstein "
    "metric; a hyperbolic fiber N with Ric_N = -(n-2) g_N is used."
)
NOTE_RIGID_F_SIGN = (
    "For the hyperbolic-times-Einstein family lambda = m+n-q-1 fails the Hessian "
    "equation; only lambda = -(m+n-q-1) satisfies it."
)
NOTE_ASSUMPTIONS = (
    "Simple connectedness and completeness are not checkable on a chart; "
    "case labels match invariant signatures only."
)


def _label(n: int, thm_a: str | None, thm_b: str | None, surface: str | None = None) -> str:
    if n == 2 and surface:
        return f"Surface({surface})"
    if n == 3 and thm_a:
        return f"ThmA({thm_a})"
    return f"ThmB({thm_b})"


def _int(params, key, default=None, minimum=None) -> int:
    v = params.get(key, default)
    if v is None:
        raise ParamError(f"missing parameter {key}")
    if float(v) != int(float(v)):
        raise ParamError(f"{key} must be an integer, got {v}")
    v = int(float(v))
    if minimum is not None and v < minimum:
        raise ParamError(f"{key} >= {minimum} required, got {v}")
    return v


def _m(params, default=2.0) -> float:
    m = float(params.get("m", default))
    if not m > 1:
        raise ParamError(f"m > 1 required, got {m}")
    return m


def _negative_lambda(params, default: float) -> float:
    lam = float(params.get("lambda", default))
    if not lam < 0:
        raise ParamError(f"lambda < 0 required for this family, got {lam}")
    return lam


def _structure(piece: Piece, u_fn, m: float, lam: float, name: str) -> QEStructure:
    return QEStructure(piece.metric, ScalarField(piece.chart, u_fn, "u"), m, lam, name)


def _hemisphere(p):
    n = _int(p, "n", 3, 2)
    m = _m(p)
    fs = float(p.get("fiber_scale", 1.0))
    piece = warp(interval("r", HEMISPHERE_RADIAL), _radial(jets.sin), sphere(n - 1, fs))
    qe = _structure(piece, _radial(jets.cos), m, m + n - 1, "hemisphere")
    exp = Expected(1, m - 1, n * (n - 1), True if n >= 3 else None, True,
                   _label(n, None, "i", "hemisphere"))
    return qe, exp, piece, ()


def _cylinder(p):
    n = _int(p, "n", 3, 3)
    m = _m(p)
    lam = m
    fs = float(p.get("fiber_scale", 1.0))
    piece = warp(interval("t", (0.1, math.pi - 0.1)), None, sphere(n - 1, fs * (n - 2) / lam))
    qe = _structure(piece, _radial(jets.sin), m, lam, "cylinder")
    exp = Expected(1, (m - 1), (n - 1) * lam, True, False, _label(n, None, "ii"))
    return qe, exp, piece, ()


def _half_line_flat(p):
    n = _int(p, "n", 3, 2)
    m = _m(p)
    C = float(p.get("C", 1.0))
    if not C > 0:
        raise ParamError("C > 0 required")
    piece = warp(interval("t"), None, flat(n - 1))
    qe = _structure(piece, lambda x: C * x[0], m, 0.0, "half_line_flat")
    exp = Expected(0, (m - 1) * C * C, 0.0, True if n >= 3 else None, True,
                   _label(n, "vi", "iii", "i"))
    return qe, exp, piece, ()


def _hyperbolic(p):
    n = _int(p, "n", 3, 2)
    m = _m(p)
    fs = float(p.get("fiber_scale", 1.0))
    piece = warp(interval("t"), _radial(jets.sinh), sphere(n - 1, fs))
    qe = _structure(piece, _radial(jets.cosh), m, -(m + n - 1), "hyperbolic")
    exp = Expected(-1, -(m - 1), -n * (n - 1), True if n >= 3 else None, True,
                   _label(n, "i", "iv", "iv"), kappa=0)
    return qe, exp, piece, (NOTE_SQRT_K,)


def _cosh_cylinder(p):
    n = _int(p, "n", 3, 2)
    m = _m(p)
    fs = float(p.get("fiber_scale", 1.0))
    piece = warp(interval("t"), _radial(jets.cosh), hyperbolic(n - 1, fs))
    qe = _structure(piece, _radial(jets.sinh), m, -(m + n - 1), "cosh_cylinder")
    exp = Expected(-1, m - 1, -n * (n - 1), True if n >= 3 else None, True,
                   _label(n, "ii", "v", "ii"))
    return qe, exp, piece, (NOTE_SQRT_K, NOTE_COSH_FIBER)


def _exp_cigar(p):
    n = _int(p, "n", 3, 2)
    m = _m(p)
    piece = warp(interval("t"), _radial(jets.exp), flat(n - 1))
    qe = _structure(piece, _radial(jets.exp), m, -(m + n - 1), "exp_cigar")
    exp = Expected(-1, 0.0, -n * (n - 1), True if n >= 3 else None, True,
                   _label(n, "iv", "vi", "iii"))
    return qe, exp, piece, (NOTE_SQRT_K, NOTE_EXP_POTENTIAL)


def _product(kind: str):
    # R x N or [0, oo) x N with N lambda-Einstein; u'' = a^2 u, a^2 = -lambda/m
    def build(p):
        if "q" in p and "n" not in p:
            q = _int(p, "q", None, 2)
        else:
            q = _int(p, "n", 3, 3) - 1
        n = q + 1
        m = _m(p)
        lam = _negative_lambda(p, -m)
        a = math.sqrt(-lam / m)
        fs = float(p.get("fiber_scale", 1.0))
        piece = warp(interval("t"), None, hyperbolic(q, fs * (q - 1) / (-lam)))
        fn = {"sinh": jets.sinh, "exp": jets.exp, "cosh": jets.cosh}[kind]
        qe = _structure(piece, lambda x: fn(a * x[0]), m, lam, f"product_{kind}")
        mu = {"sinh": (m - 1) * a * a, "exp": 0.0, "cosh": -(m - 1) * a * a}[kind]
        thm_a = {"sinh": "iii", "exp": "v", "cosh": "v"}[kind]
        thm_b = {"sinh": "ix", "exp": "viii", "cosh": "vii"}[kind]
        exp = Expected(-1, mu, (n - 1) * lam, True, False, _label(n, thm_a, thm_b),
                       kappa=n - 1 if kind == "cosh" else None)
        return qe, exp, piece, ()

    return build


def _rigid_split(p, kind: str):
    # [0,oo) x_cosh A x N, R x_exp F x N, H^{n-q} x N
    n = _int(p, "n", 4, 4)
    q = _int(p, "q", 2, 2)
    m = _m(p)
    b = n - q  # dimension of the factor carrying u
    if b < 2:
        raise ParamError(f"n - q >= 2 required, got n={n}, q={q}")
    lam = -(m + n - q - 1)
    fs = float(p.get("fiber_scale", 1.0))
    N = hyperbolic(q, fs * (q - 1) / (-lam), prefix="z")
    if kind == "d":
        base = warp(interval("r"), _radial(jets.cosh), hyperbolic(b - 1))
        u, mu = jets.sinh, m - 1
    elif kind == "e":
        base = warp(interval("r"), _radial(jets.exp), flat(b - 1))
        u, mu = jets.exp, 0.0
    else:
        base = warp(interval("r"), _radial(jets.sinh), sphere(b - 1))
        u, mu = jets.cosh, -(m - 1)
    piece = warp(base, None, N)
    qe = _structure(piece, _radial(u), m, lam, f"prop_rigid_{kind}")
    R = -b * (b - 1) + q * lam
    exp = Expected(-1, mu, R, False, False, f"PropRigid({kind})",
                   kappa=q if kind == "f" else None)
    notes = (NOTE_RIGID_F_SIGN,) if kind == "f" else ()
    return qe, exp, piece, notes


def _example_a(p):
    pp = _int(p, "p", 1, 1)
    q = _int(p, "q", 2, 2)
    m = _m(p)
    n = pp + 1 + q
    pr = dict(p, n=n, q=q)
    pr.pop("p", None)
    qe, _, piece, notes = _rigid_split(pr, "f")
    lam = -(m + pp)
    R = (q * (m - n) + n * (n - 1)) / (m + n - q - 1) * lam
    exp = Expected(-1, -(m - 1), R, False, False, "PropRigid(f)", kappa=q)
    return qe, exp, piece, notes


def _surface(builder):
    def build(p):
        return builder(dict(p, n=2))
    return build


def _fixed_n(builder, n):
    def build(p):
        return builder(dict(p, n=n))
    return build


_BUILDERS: dict[str, tuple[Callable, tuple[str, ...]]] = {
    "hemisphere": (_hemisphere, ("n", "m")),
    "cylinder": (_cylinder, ("n", "m")),
    "half_line_flat": (_half_line_flat, ("n", "m", "C")),
    "hyperbolic": (_hyperbolic, ("n", "m")),
    "cosh_cylinder": (_cosh_cylinder, ("n", "m")),
    "exp_cigar": (_exp_cigar, ("n", "m")),
    "product_cosh": (_product("cosh"), ("n", "m", "lambda")),
    "product_exp": (_product("exp"), ("n", "m", "lambda")),
    "product_sinh": (_product("sinh"), ("n", "m", "lambda")),
    "prop_rigid_a": (_product("sinh"), ("q", "m", "lambda")),
    "prop_rigid_b": (_product("exp"), ("q", "m", "lambda")),
    "prop_rigid_c": (_product("cosh"), ("q", "m", "lambda")),
    "prop_rigid_d": (lambda p: _rigid_split(p, "d"), ("n", "q", "m")),
    "prop_rigid_e": (lambda p: _rigid_split(p, "e"), ("n", "q", "m")),
    "prop_rigid_f": (lambda p: _rigid_split(p, "f"), ("n", "q", "m")),
    "exampleA": (_example_a, ("p", "q", "m")),
    "product_R_H2": (_fixed_n(_product("cosh"), 3), ("m", "lambda")),
    "half_line_H2": (_fixed_n(_product("sinh"), 3), ("m", "lambda")),
    "surface_flat": (_surface(_half_line_flat), ("m", "C")),
    "surface_cosh": (_surface(_cosh_cylinder), ("m",)),
    "surface_exp": (_surface(_exp_cigar), ("m",)),
    "surface_hyperbolic": (_surface(_hyperbolic), ("m",)),
}

COMMON_PARAMS = ("scale", "fiber_scale")


def entry_ids() -> list[str]:
    return sorted(_BUILDERS)


def build(entry_id: str, params: dict | None = None) -> CatalogEntry:
    """Construct a catalog entry; raises :class:`ParamError` on bad input."""
    if entry_id not in _BUILDERS:
        raise KeyError(entry_id)
    params = dict(params or {})
    builder, names = _BUILDERS[entry_id]
    unknown = set(params) - set(names) - set(COMMON_PARAMS)
    if unknown:
        raise ParamError(f"unknown parameter(s) for {entry_id}: {', '.join(sorted(unknown))}")
    scale = float(params.pop("scale", 1.0))
    if not scale > 0:
        raise ParamError("scale > 0 required")
    qe, exp, piece, notes = builder(params)
    qe = QEStructure(qe.g, qe.u, qe.m, qe.lam, entry_id)
    # rescaling a flat or one-dimensional fiber is only a change of coordinates
    fiber_sensitive = qe.n > 2 and entry_id not in ("half_line_flat", "exp_cigar")
    warped = piece.warped
    if scale != 1.0:
        qe = qe.rescaled(scale)
        c2 = scale * scale
        exp = Expected(exp.lam_sign, exp.mu / c2, exp.R / c2, exp.t_flat, exp.einstein,
                       exp.case_label, exp.kappa)
        warped = None  # the oracle is tied to the unscaled block structure
    return CatalogEntry(entry_id, dict(params, **({"scale": scale} if scale != 1 else {})),
                        qe, exp, warped, notes + (NOTE_ASSUMPTIONS,), fiber_sensitive)


def expected_scalar_curvature(entry_id: str, params: dict | None = None) -> float:
    return build(entry_id, params).expected.R


# default parameter sets exercised by the suite
SUITE: tuple[tuple[str, dict], ...] = (
    ("hemisphere", {"n": 3, "m": 2}),
    ("hemisphere", {"n": 4, "m": 3}),
    ("cylinder", {"n": 3, "m": 2}),
    ("cylinder", {"n": 4, "m": 2}),
    ("half_line_flat", {"n": 3, "m": 2}),
    ("half_line_flat", {"n": 4, "m": 2.5}),
    ("hyperbolic", {"n": 3, "m": 2}),
    ("hyperbolic", {"n": 4, "m": 2}),
    ("cosh_cylinder", {"n": 3, "m": 2}),
    ("cosh_cylinder", {"n": 4, "m": 3}),
    ("exp_cigar", {"n": 3, "m": 2}),
    ("exp_cigar", {"n": 4, "m": 2}),
    ("product_R_H2", {"m": 2, "lambda": -1}),
    ("half_line_H2", {"m": 2, "lambda": -2}),
    ("product_exp", {"n": 3, "m": 2}),
    ("product_cosh", {"n": 4, "m": 2}),
    ("product_exp", {"n": 4, "m": 2}),
    ("product_sinh", {"n": 4, "m": 3}),
    ("prop_rigid_d", {"n": 4, "q": 2, "m": 2}),
    ("prop_rigid_e", {"n": 4, "q": 2, "m": 2}),
    ("prop_rigid_f", {"n": 5, "q": 2, "m": 2}),
    ("exampleA", {"p": 1, "q": 2, "m": 2}),
    ("exampleA", {"p": 2, "q": 3, "m": 2.5}),
    ("surface_flat", {"m": 2}),
    ("surface_cosh", {"m": 2}),
    ("surface_exp", {"m": 2}),
    ("surface_hyperbolic", {"m": 2}),
)
