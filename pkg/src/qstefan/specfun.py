"""Special functions behind the heat-series bases.

Covers log-Gamma with sign, the Pochhammer symbol, Kummer's confluent
hypergeometric function ``Phi(a, b; z) = 1F1(a; b; z)``, generalized Laguerre
polynomials, and the two similarity solutions of the generalized heat equation

    theta_t = a^2 (theta_xx + (nu / x) theta_x)

namely

    S1 = (2 a sqrt(t))^g Phi(-g/2, (nu+1)/2; -xi)
    S2 = (2 a sqrt(t))^g xi^((1-nu)/2) Phi((1-nu-g)/2, (3-nu)/2; -xi)

with ``xi = x^2 / (4 a^2 t)``. Derivatives are analytic: they differentiate the
Kummer series term by term via ``d/dz Phi(a, b; z) = (a/b) Phi(a+1, b+1; z)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, NamedTuple

from . import kernels
from .errors import PoleError, SingularityError, SpecialFunctionError

BasisKind = Literal["S1", "S2"]

# Argument envelope inside which Kummer accuracy is guaranteed.
KUMMER_Z_ENVELOPE = 50.0


def _is_nonpositive_integer(v: float) -> bool:
    return v <= 0 and float(v).is_integer()


def ln_gamma(z: float) -> tuple[float, int]:
    """Return ``(ln|Gamma(z)|, sign(Gamma(z)))``.

    Raises
    ------
    PoleError
        If ``z`` is zero or a negative integer.
    """
    z = float(z)
    if _is_nonpositive_integer(z):
        raise PoleError(f"Gamma has a pole at z={z}")
    if z > 0:
        sign = 1
    else:
        sign = -1 if math.floor(z) % 2 else 1
    return math.lgamma(z), sign


def gamma_ratio(num: float, den: float) -> float:
    """``Gamma(num) / Gamma(den)`` through log-Gamma, keeping the sign."""
    ln_n, s_n = ln_gamma(num)
    ln_d, s_d = ln_gamma(den)
    return s_n * s_d * math.exp(ln_n - ln_d)


def pochhammer(beta: float, n: int) -> float:
    """Rising factorial ``(beta)_n``; a running product, so poles of Gamma are harmless."""
    if n < 0:
        raise ValueError("pochhammer order must be nonnegative")
    return kernels.pochhammer(float(beta), int(n))


def kummer_phi(a: float, b: float, z: float) -> float:
    """Kummer's function ``Phi(a, b; z)``.

    A terminating series (``a = -n``) is summed exactly over its ``n + 1``
    terms. Otherwise, for ``z < 0`` Kummer's transformation
    ``Phi(a, b; z) = e^z Phi(b - a, b; -z)`` replaces the alternating series by
    a positive-term one.

    Raises
    ------
    PoleError
        ``b`` is a non-positive integer and the series does not stop before
        reaching the zero denominator.
    NonConvergenceError
        The series did not settle within the kernel's term cap.
    """
    a, b, z = float(a), float(b), float(z)
    if z == 0.0 or a == 0.0:
        if _is_nonpositive_integer(b) and a != 0.0 and z != 0.0:
            raise PoleError(f"Phi({a}, {b}; z) has a parameter pole at b={b}")
        return 1.0
    if _is_nonpositive_integer(a):
        n = int(-a)
        if _is_nonpositive_integer(b) and n > int(-b):
            raise PoleError(f"Phi({a}, {b}; z): series hits b-pole before terminating")
        return kernels.hyp1f1_terminating(n, b, z)
    if _is_nonpositive_integer(b):
        raise PoleError(f"Phi({a}, {b}; z) has a parameter pole at b={b}")
    if z < 0.0:
        c = b - a
        if _is_nonpositive_integer(c):
            return math.exp(z) * kernels.hyp1f1_terminating(int(-c), b, -z)
        return math.exp(z) * kernels.hyp1f1_series(c, b, -z)
    return kernels.hyp1f1_series(a, b, z)


def laguerre(n: int, alpha: float, x: float) -> float:
    """Generalized Laguerre polynomial ``L_n^alpha(x)``.

    Uses the three-term recurrence, which is valid for every ``alpha``; it
    equals ``((alpha+1)_n / n!) Phi(-n, alpha+1; x)`` wherever the right side
    is defined. ``L_{-1}`` is taken as 0.
    """
    return kernels.laguerre(int(n), float(alpha), float(x))


@dataclass(frozen=True)
class BasisParams:
    gamma_order: float
    nu: float
    diffusivity: float

    def __post_init__(self):
        if not self.diffusivity > 0:
            raise ValueError(f"diffusivity must be > 0, got {self.diffusivity}")
        if not (math.isfinite(self.nu) and math.isfinite(self.gamma_order)):
            raise ValueError("nu and gamma_order must be finite")


@dataclass(frozen=True)
class EvalPoint:
    x: float
    t: float

    def __post_init__(self):
        if not self.t > 0:
            raise ValueError(f"basis evaluation needs t > 0, got t={self.t}")
        if not self.x >= 0:
            raise ValueError(f"basis evaluation needs x >= 0, got x={self.x}")


class BasisDerivatives(NamedTuple):
    value: float
    ddx: float
    d2dx: float
    ddt: float


def _phi_and_slopes(a, b, z, need2=True):
    """``Phi``, ``dPhi/dxi`` and ``d2Phi/dxi2`` at ``z = -xi``."""
    f0 = kummer_phi(a, b, z)
    f1 = 0.0 if a == 0.0 else -(a / b) * kummer_phi(a + 1, b + 1, z)
    f2 = 0.0
    if need2 and a != 0.0 and a + 1 != 0.0:
        f2 = (a * (a + 1) / (b * (b + 1))) * kummer_phi(a + 2, b + 2, z)
    return f0, f1, f2


def _s1_parts(p: BasisParams, pt: EvalPoint) -> BasisDerivatives:
    g, nu, d = p.gamma_order, p.nu, p.diffusivity
    x, t = pt.x, pt.t
    scale = (2.0 * d * math.sqrt(t)) ** g
    xi = x * x / (4.0 * d * d * t)
    xi_x = x / (2.0 * d * d * t)
    xi_xx = 1.0 / (2.0 * d * d * t)
    f0, f1, f2 = _phi_and_slopes(-g / 2.0, (nu + 1.0) / 2.0, -xi)
    return BasisDerivatives(
        value=scale * f0,
        ddx=scale * f1 * xi_x,
        d2dx=scale * (f2 * xi_x * xi_x + f1 * xi_xx),
        ddt=scale * (g / (2.0 * t) * f0 - f1 * xi / t),
    )


def _s2_at_origin(p: BasisParams, pt: EvalPoint) -> BasisDerivatives:
    # Near x = 0: S2 ~ scale * (x / (2 a sqrt t))^(1-nu) * (1 + O(x^2)).
    g, nu, d, t = p.gamma_order, p.nu, p.diffusivity, pt.t
    scale = (2.0 * d * math.sqrt(t)) ** g
    e = (1.0 - nu) / 2.0
    nan = float("nan")
    if e > 0:
        value = 0.0
    elif e == 0:
        value = scale
    else:
        value = nan
    if nu < 0 or nu == 1:
        slope = 0.0
    elif nu == 0:
        slope = scale / (2.0 * d * math.sqrt(t))
    else:
        slope = nan
    if e == 0:
        ddt = scale * g / (2.0 * t)
    elif e > 0:
        ddt = 0.0
    else:
        ddt = nan
    return BasisDerivatives(value=value, ddx=slope, d2dx=nan, ddt=ddt)


def _s2_parts(p: BasisParams, pt: EvalPoint) -> BasisDerivatives:
    g, nu, d = p.gamma_order, p.nu, p.diffusivity
    x, t = pt.x, pt.t
    if x == 0.0:
        return _s2_at_origin(p, pt)
    scale = (2.0 * d * math.sqrt(t)) ** g
    xi = x * x / (4.0 * d * d * t)
    xi_x = x / (2.0 * d * d * t)
    xi_xx = 1.0 / (2.0 * d * d * t)
    e = (1.0 - nu) / 2.0
    h0, h1, h2 = _phi_and_slopes((1.0 - nu - g) / 2.0, (3.0 - nu) / 2.0, -xi)
    # G(xi) = xi^e H(xi) and its xi-derivatives, factored to avoid xi^(e-2) overflow.
    pe = xi**e
    g0 = pe * h0
    g1 = pe * (e * h0 / xi + h1)
    g2 = pe * (e * (e - 1.0) * h0 / (xi * xi) + 2.0 * e * h1 / xi + h2)
    return BasisDerivatives(
        value=scale * g0,
        ddx=scale * g1 * xi_x,
        d2dx=scale * (g2 * xi_x * xi_x + g1 * xi_xx),
        ddt=scale * (g / (2.0 * t) * g0 - g1 * xi / t),
    )


def basis_parts(kind: BasisKind, p: BasisParams, pt: EvalPoint) -> BasisDerivatives:
    """Value, first and second x-derivatives, and t-derivative of a basis.

    At ``x = 0`` the S2 basis is only partly defined; the undefined entries come
    back as NaN and the public single-quantity functions turn them into
    :class:`SingularityError`.
    """
    if kind == "S1":
        return _s1_parts(p, pt)
    if kind == "S2":
        return _s2_parts(p, pt)
    raise ValueError(f"unknown basis kind {kind!r}")


def _checked(v: float, what: str, kind: str, pt: EvalPoint) -> float:
    if math.isnan(v):
        raise SingularityError(f"{what} of {kind} is singular at x={pt.x}, t={pt.t}")
    return v


def s1_basis(p: BasisParams, pt: EvalPoint) -> float:
    return _s1_parts(p, pt).value


def s2_basis(p: BasisParams, pt: EvalPoint) -> float:
    """S2 value; raises :class:`SingularityError` at ``x = 0`` when ``nu > 1``."""
    return _checked(_s2_parts(p, pt).value, "value", "S2", pt)


def basis_ddx(kind: BasisKind, p: BasisParams, pt: EvalPoint) -> float:
    return _checked(basis_parts(kind, p, pt).ddx, "x-derivative", kind, pt)


def basis_d2dx(kind: BasisKind, p: BasisParams, pt: EvalPoint) -> float:
    return _checked(basis_parts(kind, p, pt).d2dx, "second x-derivative", kind, pt)


def basis_ddt(kind: BasisKind, p: BasisParams, pt: EvalPoint) -> float:
    return _checked(basis_parts(kind, p, pt).ddt, "t-derivative", kind, pt)


def s1_small_z_limit(beta: float, mu: float) -> float:
    """``Gamma(mu) / Gamma(mu + beta/2)``.

    This is the normalization constant attached to the small-argument
    behaviour of ``z^-beta Phi(-beta/2, mu; -z^2)``. Read literally the limit
    ``z -> 0`` diverges for ``beta > 0`` (``Phi -> 1``); the ratio is the
    coefficient of the large-``z`` power law ``Phi(-beta/2, mu; -z^2) ~
    Gamma(mu)/Gamma(mu+beta/2) z^beta``, which is what the heat-series
    initial-data relations use.
    """
    try:
        return gamma_ratio(mu, mu + beta / 2.0)
    except PoleError as exc:
        raise PoleError(f"s1_small_z_limit(beta={beta}, mu={mu}): {exc}") from exc


__all__ = [
    "BasisDerivatives",
    "BasisKind",
    "BasisParams",
    "EvalPoint",
    "SpecialFunctionError",
    "basis_d2dx",
    "basis_ddt",
    "basis_ddx",
    "basis_parts",
    "gamma_ratio",
    "kummer_phi",
    "laguerre",
    "ln_gamma",
    "pochhammer",
    "s1_basis",
    "s1_small_z_limit",
    "s2_basis",
]
