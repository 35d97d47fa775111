"""Truncated heat-series temperature fields.

A :class:`HeatSeries` is

    theta(x, t) = sum_n (4 a^2 t)^n [ A_n L_n^(mu-1)(-xi)
                                      + B_n xi^(1-mu) Phi(1-mu-n, 2-mu; -xi) ]

with ``xi = x^2/(4 a^2 t)`` and ``mu = (nu+1)/2``. The A-family term of order
``n`` is ``((mu)_n / n!) S1`` with ``gamma = 2n``; the B-family term is exactly
``S2`` with ``gamma = 2n``. Both therefore solve the generalized heat equation
for any coefficients. When ``mu = 1`` (``nu = 1``) the two families coincide.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import SingularityError
from .specfun import BasisDerivatives, BasisParams, EvalPoint, basis_parts, pochhammer


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=float).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class HeatSeries:
    diffusivity: float
    nu: float
    coeffs_a: np.ndarray
    coeffs_b: np.ndarray = None
    mu: float = field(init=False)

    def __post_init__(self):
        a = _frozen_array(self.coeffs_a)
        b = _frozen_array(np.zeros_like(a) if self.coeffs_b is None else self.coeffs_b)
        if a.size == 0:
            raise ValueError("a heat series needs at least one coefficient")
        if a.shape != b.shape:
            raise ValueError(f"coeffs_a has {a.size} entries but coeffs_b has {b.size}")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("heat-series coefficients must be finite")
        if not self.diffusivity > 0:
            raise ValueError(f"diffusivity must be > 0, got {self.diffusivity}")
        object.__setattr__(self, "coeffs_a", a)
        object.__setattr__(self, "coeffs_b", b)
        object.__setattr__(self, "mu", (self.nu + 1.0) / 2.0)

    @property
    def truncation(self) -> int:
        return self.coeffs_a.size - 1

    @classmethod
    def zeros(cls, diffusivity, nu, truncation):
        z = np.zeros(truncation + 1)
        return cls(diffusivity, nu, z, z)

    def __add__(self, other: "HeatSeries") -> "HeatSeries":
        if (self.diffusivity, self.nu) != (other.diffusivity, other.nu):
            raise ValueError("can only add series with equal diffusivity and nu")
        n = max(self.coeffs_a.size, other.coeffs_a.size)

        def pad(c):
            return np.pad(c, (0, n - c.size))

        return HeatSeries(
            self.diffusivity,
            self.nu,
            pad(self.coeffs_a) + pad(other.coeffs_a),
            pad(self.coeffs_b) + pad(other.coeffs_b),
        )

    def __repr__(self):
        return (
            f"HeatSeries(diffusivity={self.diffusivity}, nu={self.nu}, "
            f"coeffs_a={self.coeffs_a.tolist()}, coeffs_b={self.coeffs_b.tolist()})"
        )


def family_term(family: str, n: int, diffusivity: float, nu: float, x: float, t: float) -> BasisDerivatives:
    """Single basis term of the series (family ``"A"`` or ``"B"``, order ``n``)."""
    p = BasisParams(2.0 * n, nu, diffusivity)
    pt = EvalPoint(x, t)
    if family == "A":
        w = pochhammer((nu + 1.0) / 2.0, n) / math.factorial(n)
        d = basis_parts("S1", p, pt)
        return BasisDerivatives(w * d.value, w * d.ddx, w * d.d2dx, w * d.ddt)
    if family == "B":
        return basis_parts("S2", p, pt)
    raise ValueError(f"unknown family {family!r}")


def _accumulate(s: HeatSeries, x: float, t: float) -> np.ndarray:
    """Sum of ``[value, ddx, d2dx, ddt]`` over all nonzero terms."""
    out = np.zeros(4)
    for n in range(s.truncation + 1):
        if s.coeffs_a[n] != 0.0:
            out += s.coeffs_a[n] * np.asarray(family_term("A", n, s.diffusivity, s.nu, x, t))
        if s.coeffs_b[n] != 0.0:
            out += s.coeffs_b[n] * np.asarray(family_term("B", n, s.diffusivity, s.nu, x, t))
    return out


def _point(pt) -> EvalPoint:
    return pt if isinstance(pt, EvalPoint) else EvalPoint(*pt)


def _require_finite(v: float, what: str, pt: EvalPoint) -> float:
    if math.isnan(v):
        raise SingularityError(f"series {what} is singular at x={pt.x}, t={pt.t}")
    return float(v)


def evaluate_all(s: HeatSeries, pt) -> BasisDerivatives:
    """Value and derivatives in one pass; singular entries are NaN."""
    pt = _point(pt)
    return BasisDerivatives(*(float(v) for v in _accumulate(s, pt.x, pt.t)))


def evaluate(s: HeatSeries, pt) -> float:
    pt = _point(pt)
    return _require_finite(_accumulate(s, pt.x, pt.t)[0], "value", pt)


def ddx(s: HeatSeries, pt) -> float:
    pt = _point(pt)
    return _require_finite(_accumulate(s, pt.x, pt.t)[1], "x-derivative", pt)


def d2dx(s: HeatSeries, pt) -> float:
    pt = _point(pt)
    return _require_finite(_accumulate(s, pt.x, pt.t)[2], "second x-derivative", pt)


def ddt(s: HeatSeries, pt) -> float:
    pt = _point(pt)
    return _require_finite(_accumulate(s, pt.x, pt.t)[3], "t-derivative", pt)


@dataclass(frozen=True)
class ResidualReport:
    """Pointwise residuals and their maximum.

    ``labels`` optionally names the condition behind each entry (boundary
    residuals); PDE residual reports leave it empty.
    """

    max_residual: float
    points: tuple
    per_point: tuple
    labels: tuple = ()

    @property
    def pde_max_residual(self) -> float:
        return self.max_residual

    def by_label(self) -> dict:
        out: dict = {}
        for lab, r in zip(self.labels, self.per_point):
            out[lab] = max(out.get(lab, 0.0), r)
        return out


def pde_residual(s: HeatSeries, grid: Iterable) -> ResidualReport:
    """Normalized residual ``|theta_t - a^2 (theta_xx + nu/x theta_x)| / max(1, |theta|)``."""
    pts = [_point(p) for p in grid]
    if not pts:
        raise ValueError("residual grid is empty")
    a2 = s.diffusivity**2
    per = []
    for pt in pts:
        if pt.x <= 0:
            raise ValueError("PDE residual needs x > 0")
        v, dx, dxx, dt = _accumulate(s, pt.x, pt.t)
        per.append(float(abs(dt - a2 * (dxx + s.nu / pt.x * dx)) / max(1.0, abs(v))))
    return ResidualReport(max(per), tuple(pts), tuple(per))


def grid(xs: Sequence[float], ts: Sequence[float]) -> list[EvalPoint]:
    return [EvalPoint(float(x), float(t)) for t in ts for x in xs]


__all__ = [
    "HeatSeries",
    "ResidualReport",
    "d2dx",
    "ddt",
    "ddx",
    "evaluate",
    "evaluate_all",
    "family_term",
    "grid",
    "pde_residual",
]
