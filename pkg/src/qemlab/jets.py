"""Truncated multivariate Taylor arithmetic (forward-mode jets).

A :class:`Jet` stores, for every entry of an array of shape ``shape``, the
Taylor coefficients ``c_a = d^a f / a!`` of a function of ``nvars`` variables
for all multi-indices ``|a| <= order``.  Arithmetic propagates these
coefficients exactly (up to floating point rounding), so derivatives of any
expression built from the operations below carry no truncation error.

Monomials are stored in graded order, so the coefficients of a jet of lower
order are a prefix of the coefficients of a higher-order jet.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations_with_replacement
from typing import Sequence

import numpy as np

from .errors import NumericError, ShapeError

MAX_ORDER = 4


@dataclass(frozen=True)
class _Basis:
    nvars: int
    order: int
    exponents: tuple[tuple[int, ...], ...]
    index: dict
    sizes: tuple[int, ...]  # sizes[k] = number of monomials of degree <= k
    pair_a: np.ndarray
    pair_b: np.ndarray
    pair_starts: np.ndarray
    diff_src: tuple[np.ndarray, ...]
    diff_fac: tuple[np.ndarray, ...]
    factorials: np.ndarray  # a! for every stored monomial


@lru_cache(maxsize=None)
def _basis(nvars: int, order: int) -> _Basis:
    exps: list[tuple[int, ...]] = []
    sizes = []
    for d in range(order + 1):
        for combo in combinations_with_replacement(range(nvars), d):
            e = [0] * nvars
            for c in combo:
                e[c] += 1
            exps.append(tuple(e))
        sizes.append(len(exps))
    index = {e: i for i, e in enumerate(exps)}
    deg = [sum(e) for e in exps]

    ia, ib, ic = [], [], []
    for a, ea in enumerate(exps):
        for b, eb in enumerate(exps):
            if deg[a] + deg[b] <= order:
                ia.append(a)
                ib.append(b)
                ic.append(index[tuple(x + y for x, y in zip(ea, eb))])
    ic_arr = np.asarray(ic)
    perm = np.argsort(ic_arr, kind="stable")
    ic_sorted = ic_arr[perm]
    starts = np.flatnonzero(np.r_[True, ic_sorted[1:] != ic_sorted[:-1]])

    diff_src, diff_fac = [], []
    lower = sizes[order - 1] if order > 0 else 0
    for v in range(nvars):
        src = np.empty(lower, dtype=int)
        fac = np.empty(lower)
        for i in range(lower):
            e = list(exps[i])
            e[v] += 1
            src[i] = index[tuple(e)]
            fac[i] = e[v]
        diff_src.append(src)
        diff_fac.append(fac)

    facts = np.array([math.prod(math.factorial(k) for k in e) for e in exps], dtype=float)
    return _Basis(
        nvars, order, tuple(exps), index, tuple(sizes),
        np.asarray(ia)[perm], np.asarray(ib)[perm], starts,
        tuple(diff_src), tuple(diff_fac), facts,
    )


def _as_jet(x, nvars: int, order: int) -> "Jet":
    if isinstance(x, Jet):
        return x
    arr = np.asarray(x, dtype=float)
    coeffs = np.zeros(arr.shape + (_basis(nvars, order).sizes[-1],))
    coeffs[..., 0] = arr
    return Jet(coeffs, nvars, order)


class Jet:
    """Array of truncated Taylor polynomials in ``nvars`` variables."""

    __slots__ = ("coeffs", "nvars", "order")
    __array_priority__ = 1000

    def __init__(self, coeffs: np.ndarray, nvars: int, order: int):
        self.coeffs = coeffs
        self.nvars = nvars
        self.order = order

    # construction -----------------------------------------------------
    @classmethod
    def variables(cls, point: Sequence[float], order: int) -> list["Jet"]:
        """Seed jets for the coordinate functions ``x_i`` expanded at ``point``."""
        n = len(point)
        basis = _basis(n, order)
        out = []
        for i, x0 in enumerate(point):
            c = np.zeros(basis.sizes[-1])
            c[0] = float(x0)
            if order >= 1:
                c[1 + i] = 1.0
            out.append(cls(c, n, order))
        return out

    @classmethod
    def constant(cls, value, nvars: int, order: int) -> "Jet":
        return _as_jet(value, nvars, order)

    # shape handling -----------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return self.coeffs.shape[:-1]

    def __len__(self) -> int:
        return self.shape[0]

    def __getitem__(self, key) -> "Jet":
        if not isinstance(key, tuple):
            key = (key,)
        return Jet(self.coeffs[key + (Ellipsis, slice(None))], self.nvars, self.order)

    def __repr__(self) -> str:
        return f"Jet(shape={self.shape}, nvars={self.nvars}, order={self.order})"

    def truncate(self, order: int) -> "Jet":
        if order >= self.order:
            return self
        size = _basis(self.nvars, self.order).sizes[order]
        return Jet(self.coeffs[..., :size], self.nvars, order)

    def transpose(self, *axes: int) -> "Jet":
        return Jet(np.transpose(self.coeffs, tuple(axes) + (len(axes),)), self.nvars, self.order)

    # derivative extraction ------------------------------------------------
    @property
    def value(self) -> np.ndarray:
        return self.coeffs[..., 0]

    def partial(self, multi_index: Sequence[int]) -> np.ndarray:
        """Partial derivative ``d^a f`` at the expansion point."""
        e = tuple(int(k) for k in multi_index)
        if sum(e) > self.order:
            raise ValueError(f"derivative of order {sum(e)} exceeds jet order {self.order}")
        basis = _basis(self.nvars, self.order)
        i = basis.index[e]
        return self.coeffs[..., i] * basis.factorials[i]

    def derivatives(self, k: int) -> np.ndarray:
        """All k-th partials as a symmetric array with ``k`` trailing axes of size nvars."""
        if k > self.order:
            raise ValueError(f"derivative of order {k} exceeds jet order {self.order}")
        n = self.nvars
        basis = _basis(n, self.order)
        out = np.empty(self.shape + (n,) * k)
        for idx in np.ndindex(*(n,) * k):
            e = [0] * n
            for j in idx:
                e[j] += 1
            i = basis.index[tuple(e)]
            out[(Ellipsis,) + idx] = self.coeffs[..., i] * basis.factorials[i]
        return out

    @property
    def first(self) -> np.ndarray:
        return self.derivatives(1)

    @property
    def second(self) -> np.ndarray:
        return self.derivatives(2)

    @property
    def third(self) -> np.ndarray:
        return self.derivatives(3)

    def diff(self, var: int) -> "Jet":
        """Jet of ``d f / d x_var``; the order drops by one."""
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        basis = _basis(self.nvars, self.order)
        c = self.coeffs[..., basis.diff_src[var]] * basis.diff_fac[var]
        return Jet(c, self.nvars, self.order - 1)

    def grad(self) -> "Jet":
        """Stack of all first partials; the derivative index is the leading axis."""
        parts = [self.diff(v).coeffs for v in range(self.nvars)]
        return Jet(np.stack(parts, axis=0), self.nvars, self.order - 1)

    # arithmetic -------------------------------------------------------------
    def _coerce(self, other) -> tuple["Jet", "Jet"]:
        o = _as_jet(other, self.nvars, self.order)
        if o.nvars != self.nvars:
            raise ShapeError(f"jets over {self.nvars} and {o.nvars} variables cannot be combined")
        order = min(self.order, o.order)
        return self.truncate(order), o.truncate(order)

    def __add__(self, other):
        if not isinstance(other, Jet):
            c = self.coeffs.copy()
            c[..., 0] = c[..., 0] + np.asarray(other, dtype=float)
            return Jet(c, self.nvars, self.order)
        a, b = self._coerce(other)
        return Jet(a.coeffs + b.coeffs, a.nvars, a.order)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.coeffs, self.nvars, self.order)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            arr = np.asarray(other, dtype=float)
            return Jet(self.coeffs * arr[..., None], self.nvars, self.order)
        a, b = self._coerce(other)
        return Jet(_mul(a.coeffs, b.coeffs, a.nvars, a.order), a.nvars, a.order)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            arr = np.asarray(other, dtype=float)
            return Jet(self.coeffs / arr[..., None], self.nvars, self.order)
        return self * reciprocal(other)

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __pow__(self, exponent):
        if isinstance(exponent, (int, np.integer)) and exponent >= 0:
            result = _as_jet(np.ones(self.shape), self.nvars, self.order)
            base = self
            e = int(exponent)
            while e:
                if e & 1:
                    result = result * base
                e >>= 1
                if e:
                    base = base * base
            return result
        return power(self, float(exponent))


def _mul(a: np.ndarray, b: np.ndarray, nvars: int, order: int) -> np.ndarray:
    basis = _basis(nvars, order)
    prod = a[..., basis.pair_a] * b[..., basis.pair_b]
    return np.add.reduceat(prod, basis.pair_starts, axis=-1)


def _check_finite(arr: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"non-finite value in {what}")


def _compose(x: Jet, taylor: list[np.ndarray]) -> Jet:
    """f(x) given ``taylor[k] = f^(k)(x0) / k!`` evaluated at the base values."""
    for t in taylor:
        _check_finite(np.asarray(t), "elementary function")
    h = Jet(x.coeffs.copy(), x.nvars, x.order)
    h.coeffs[..., 0] = 0.0
    result = _as_jet(taylor[x.order], x.nvars, x.order)
    for k in range(x.order - 1, -1, -1):
        result = result * h + taylor[k]
    return result


def _lift(fn):
    """Let elementary functions accept plain floats and arrays too."""

    def wrapper(x, *args):
        if isinstance(x, Jet):
            return fn(x, *args)
        return fn.numeric(np.asarray(x, dtype=float), *args)

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _cyclic(x: Jet, cycle) -> Jet:
    v = x.value
    vals = [f(v) for f in cycle]
    return _compose(x, [vals[k % len(vals)] / math.factorial(k) for k in range(x.order + 1)])


def _sin(x):
    return _cyclic(x, (np.sin, np.cos, lambda v: -np.sin(v), lambda v: -np.cos(v)))


def _cos(x):
    return _cyclic(x, (np.cos, lambda v: -np.sin(v), lambda v: -np.cos(v), np.sin))


def _sinh(x):
    return _cyclic(x, (np.sinh, np.cosh))


def _cosh(x):
    return _cyclic(x, (np.cosh, np.sinh))


def _exp(x):
    return _cyclic(x, (np.exp,))


def _log(x):
    v = x.value
    if np.any(v <= 0):
        raise NumericError("log of a non-positive value")
    taylor = [np.log(v)] + [(-1.0) ** (k - 1) / (k * v**k) for k in range(1, x.order + 1)]
    return _compose(x, taylor)


def _power(x, a: float):
    v = x.value
    if np.any(v <= 0) and not float(a).is_integer():
        raise NumericError("non-integer power of a non-positive value")
    taylor = []
    coef = 1.0
    for k in range(x.order + 1):
        taylor.append(coef * v ** (a - k) / math.factorial(k))
        coef *= a - k
    return _compose(x, taylor)


def _reciprocal(x):
    v = x.value
    if np.any(v == 0):
        raise NumericError("division by a jet with zero value")
    return _compose(x, [(-1.0) ** k / v ** (k + 1) for k in range(x.order + 1)])


_sin.numeric = np.sin
_cos.numeric = np.cos
_sinh.numeric = np.sinh
_cosh.numeric = np.cosh
_exp.numeric = np.exp
_log.numeric = np.log
_power.numeric = np.power
_reciprocal.numeric = np.reciprocal

sin = _lift(_sin)
cos = _lift(_cos)
sinh = _lift(_sinh)
cosh = _lift(_cosh)
exp = _lift(_exp)
log = _lift(_log)
power = _lift(_power)
reciprocal = _lift(_reciprocal)


def sqrt(x):
    return power(x, 0.5)


def tanh(x):
    return sinh(x) / cosh(x)


def tan(x):
    return sin(x) / cos(x)


# tensor assembly and contraction --------------------------------------------

def _template(items) -> Jet | None:
    for item in items:
        if isinstance(item, Jet):
            return item
        if isinstance(item, (list, tuple)):
            t = _template(item)
            if t is not None:
                return t
    return None


def array(nested, nvars: int | None = None, order: int | None = None) -> Jet:
    """Assemble a Jet array from a nested list of jets and plain numbers."""
    t = _template(nested if isinstance(nested, (list, tuple)) else [nested])
    if t is None:
        if nvars is None or order is None:
            raise ValueError("nvars and order are required when no entry is a Jet")
        return _as_jet(nested, nvars, order)
    nvars, order = t.nvars, min(_orders(nested))

    def build(item):
        if isinstance(item, (list, tuple)):
            return np.stack([build(i) for i in item], axis=0)
        return _as_jet(item, nvars, order).truncate(order).coeffs

    return Jet(build(nested), nvars, order)


def _orders(nested):
    if isinstance(nested, Jet):
        return [nested.order]
    if isinstance(nested, (list, tuple)):
        out = []
        for item in nested:
            out.extend(_orders(item))
        return out
    return []


def diag(entries, nvars: int | None = None, order: int | None = None) -> Jet:
    """Diagonal ``len(entries) x len(entries)`` Jet matrix."""
    n = len(entries)
    rows = [[entries[i] if i == j else 0.0 for j in range(n)] for i in range(n)]
    return array(rows, nvars, order)


def einsum(subscripts: str, *operands):
    """``numpy.einsum`` over the tensor axes of one or two jets (or arrays)."""
    if "..." in subscripts:
        raise ValueError("ellipsis subscripts are not supported")
    inputs, output = subscripts.replace(" ", "").split("->")
    terms = inputs.split(",")
    if len(terms) != len(operands):
        raise ShapeError("subscripts do not match the number of operands")
    jets = [op for op in operands if isinstance(op, Jet)]
    if not jets:
        return np.einsum(subscripts, *operands)
    z = next(ch for ch in "ZYXWVUTSRQPONM" if ch not in subscripts)
    if len(operands) == 1:
        (x,) = operands
        return Jet(np.einsum(f"{terms[0]}{z}->{output}{z}", x.coeffs), x.nvars, x.order)
    if len(operands) != 2:
        raise ValueError("at most two operands are supported")
    a, b = operands
    if not isinstance(a, Jet) or not isinstance(b, Jet):
        j = a if isinstance(a, Jet) else b
        ca = a.coeffs if isinstance(a, Jet) else np.asarray(a, dtype=float)
        cb = b.coeffs if isinstance(b, Jet) else np.asarray(b, dtype=float)
        ta = terms[0] + (z if isinstance(a, Jet) else "")
        tb = terms[1] + (z if isinstance(b, Jet) else "")
        return Jet(np.einsum(f"{ta},{tb}->{output}{z}", ca, cb), j.nvars, j.order)
    a, b = a._coerce(b)
    basis = _basis(a.nvars, a.order)
    prod = np.einsum(
        f"{terms[0]}{z},{terms[1]}{z}->{output}{z}",
        a.coeffs[..., basis.pair_a],
        b.coeffs[..., basis.pair_b],
    )
    return Jet(np.add.reduceat(prod, basis.pair_starts, axis=-1), a.nvars, a.order)


def inv(matrix: Jet) -> Jet:
    """Exact inverse of a Jet matrix via the terminating Neumann series."""
    if not isinstance(matrix, Jet):
        return np.linalg.inv(matrix)
    g0 = matrix.value
    g0_inv = np.linalg.inv(g0)
    nil = matrix - g0  # zero constant term, so nil^(order+1) = 0
    step = -einsum("ij,jk->ik", g0_inv, nil)
    term = _as_jet(g0_inv, matrix.nvars, matrix.order)
    total = term
    for _ in range(matrix.order):
        term = einsum("ij,jk->ik", step, term)
        total = total + term
    return total


def value(x) -> np.ndarray:
    """Base value of a jet, or the array itself."""
    return x.value if isinstance(x, Jet) else np.asarray(x, dtype=float)
