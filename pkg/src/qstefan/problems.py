"""Inverse Stefan problems and the linear systems they reduce to.

Three problem kinds are supported:

* :class:`OnePhaseISP`: melt region ``0 < x < alpha sqrt(t)`` with a Robin
  condition at ``x = 0`` whose right side is the unknown (or given) flux
  ``P(t)``, the melt isotherm at the free boundary, and the Stefan condition
  ``lambda theta_x = L rho dalpha/dt``. Because every series term is
  homogeneous in ``(x, sqrt t)``, each condition becomes a power series in
  ``t`` and matching powers gives a block-diagonal square system.
* :class:`ModelProblemD0`: the melting micro-asperity. Only the Laguerre
  family is used, the isotherm ``theta(alpha(t), t) = f(t)`` fixes the
  coefficients (a diagonal system for ``alpha sqrt(t)``), and the flux follows
  from the Stefan balance.
* :class:`TwoPhaseISP`: a melt phase and a solid phase separated by
  ``alpha(t)``. The initial profile of the solid fixes one linear relation per
  order; Robin, both isotherms and the flux balance are imposed at Chebyshev
  collocation times. With more collocation rows than unknowns the system is
  tall and is solved in the least-squares sense.

Boundary data can be overridden by Taylor coefficients (``*_taylor`` fields)
so that a manufactured solution can be pushed through the same pipeline.
Stefan-condition sources are written ``t^(-1/2) sum_n s_n t^n``, the natural
form when ``alpha(t) = alpha sqrt(t)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence, Union

import numpy as np

from .errors import AssemblyError, DimensionMismatchError, SpecialFunctionError
from .heatseries import HeatSeries, ResidualReport, evaluate_all, family_term
from .linsys import condition_number
from .specfun import gamma_ratio, laguerre


class _Unknown:
    """Marker for a flux that is to be recovered."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UNKNOWN"

    def __reduce__(self):
        return (_Unknown, ())


UNKNOWN = _Unknown()

RANK_WARNING_CONDITION = 1e12


@dataclass(frozen=True)
class FreeBoundary:
    """Prescribed phase-change front ``alpha(t)``.

    ``kind="sqrt"``: ``alpha(t) = coeffs[0] * sqrt(t)``.
    ``kind="poly"``: ``alpha(t) = sum_k coeffs[k] t^k``.
    """

    kind: str
    coeffs: tuple

    def __post_init__(self):
        if self.kind not in ("sqrt", "poly"):
            raise ValueError(f"unknown boundary kind {self.kind!r}")
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if self.kind == "sqrt" and len(self.coeffs) != 1:
            raise ValueError("a sqrt boundary takes exactly one coefficient")
        if not self.coeffs:
            raise ValueError("boundary needs at least one coefficient")

    @classmethod
    def sqrt(cls, coeff: float) -> "FreeBoundary":
        return cls("sqrt", (coeff,))

    @classmethod
    def poly(cls, coeffs: Sequence[float]) -> "FreeBoundary":
        return cls("poly", tuple(coeffs))

    @property
    def self_similar(self) -> bool:
        return self.kind == "sqrt"

    def position(self, t: float) -> float:
        if self.kind == "sqrt":
            return self.coeffs[0] * math.sqrt(t)
        return float(np.polynomial.polynomial.polyval(t, self.coeffs))

    def rate(self, t: float) -> float:
        if t <= 0:
            raise AssemblyError(f"boundary speed is unbounded at t={t}")
        if self.kind == "sqrt":
            return self.coeffs[0] / (2.0 * math.sqrt(t))
        d = np.polynomial.polynomial.polyder(self.coeffs)
        return float(np.polynomial.polynomial.polyval(t, d)) if len(d) else 0.0


def _taylor(coeffs, t: float) -> float:
    return float(np.polynomial.polynomial.polyval(t, coeffs)) if len(coeffs) else 0.0


def _tuple(v):
    return None if v is None else tuple(float(c) for c in v)


def _check_domain(nu, strict, what):
    if strict and not nu > 0:
        raise ValueError(f"{what}: nu must be > 0 (pass strict_domain=False to override)")


@dataclass(frozen=True)
class OnePhaseISP:
    nu: float
    diffusivity: float
    melt_temp: float
    robin_beta: float
    robin_gamma: float
    latent_heat: float
    density: float
    conductivity: float
    boundary_coeff: float
    flux_taylor: object = UNKNOWN
    truncation: int = 2
    boundary_temp_taylor: tuple | None = None
    stefan_source_taylor: tuple = ()
    strict_domain: bool = True

    def __post_init__(self):
        if not self.diffusivity > 0:
            raise ValueError("diffusivity must be > 0")
        if self.truncation < 0:
            raise ValueError("truncation must be >= 0")
        _check_domain(self.nu, self.strict_domain, "OnePhaseISP")
        if self.flux_taylor is not UNKNOWN:
            object.__setattr__(self, "flux_taylor", _tuple(self.flux_taylor))
        object.__setattr__(self, "boundary_temp_taylor", _tuple(self.boundary_temp_taylor))
        object.__setattr__(self, "stefan_source_taylor", _tuple(self.stefan_source_taylor))

    @property
    def flux_known(self) -> bool:
        return self.flux_taylor is not UNKNOWN

    @property
    def boundary(self) -> FreeBoundary:
        return FreeBoundary.sqrt(self.boundary_coeff)

    @property
    def isotherm_taylor(self) -> tuple:
        return self.boundary_temp_taylor if self.boundary_temp_taylor is not None else (self.melt_temp,)


@dataclass(frozen=True)
class ModelProblemD0:
    nu: float
    diffusivity: float
    boundary: FreeBoundary
    f_taylor: tuple
    conductivity: float
    latent_heat: float
    density: float
    truncation: int = 2
    horizon: float = 1.0

    def __post_init__(self):
        if not self.diffusivity > 0:
            raise ValueError("diffusivity must be > 0")
        if self.truncation < 0:
            raise ValueError("truncation must be >= 0")
        if not self.nu > -1:
            raise ValueError("model problem needs nu > -1 so that beta = (nu-1)/2 > -1")
        if isinstance(self.boundary, (int, float)):
            object.__setattr__(self, "boundary", FreeBoundary.sqrt(self.boundary))
        f = _tuple(self.f_taylor)
        if not f or f[0] != 0.0:
            raise ValueError("concordance alpha(0) = theta(0,0) = f(0) = 0 requires f_taylor[0] == 0")
        if self.boundary.position(0.0) != 0.0:
            raise ValueError("concordance requires alpha(0) = 0")
        object.__setattr__(self, "f_taylor", f)

    @property
    def laguerre_order(self) -> float:
        return (self.nu - 1.0) / 2.0


@dataclass(frozen=True)
class TwoPhaseISP:
    nu: float
    a1: float
    a2: float
    melt_temp: float
    robin_beta: float
    robin_gamma: float
    latent_heat: float
    density: float
    conductivity1: float
    conductivity2: float
    initial_profile_taylor: tuple
    boundary: FreeBoundary
    collocation_count: int = 3
    horizon: float = 1.0
    truncation: int = 1
    far_field_cutoff: float | None = None
    flux_terms: int | None = None
    iso1_taylor: tuple | None = None
    iso2_taylor: tuple | None = None
    stefan_source_taylor: tuple = ()
    strict_domain: bool = True

    def __post_init__(self):
        if not (self.a1 > 0 and self.a2 > 0):
            raise ValueError("diffusivities a1, a2 must be > 0")
        if self.truncation < 0:
            raise ValueError("truncation must be >= 0")
        if self.collocation_count < 1:
            raise ValueError("collocation_count must be >= 1")
        if not self.horizon > 0:
            raise ValueError("horizon must be > 0")
        if self.strict_domain and self.horizon > 1.0:
            raise ValueError("horizon must be <= 1 (pass strict_domain=False to override)")
        _check_domain(self.nu, self.strict_domain, "TwoPhaseISP")
        if isinstance(self.boundary, (int, float)):
            object.__setattr__(self, "boundary", FreeBoundary.sqrt(self.boundary))
        prof = _tuple(self.initial_profile_taylor)
        if not prof:
            raise ValueError("initial_profile_taylor needs at least f(0)")
        if self.iso1_taylor is None and self.iso2_taylor is None and prof[0] != self.melt_temp:
            raise ValueError("concordance f(0) = T_m requires initial_profile_taylor[0] == melt_temp")
        if self.far_field_cutoff is not None and not self.far_field_cutoff > 0:
            raise ValueError("far_field_cutoff must be > 0")
        object.__setattr__(self, "initial_profile_taylor", prof)
        object.__setattr__(self, "iso1_taylor", _tuple(self.iso1_taylor))
        object.__setattr__(self, "iso2_taylor", _tuple(self.iso2_taylor))
        object.__setattr__(self, "stefan_source_taylor", _tuple(self.stefan_source_taylor))

    @property
    def n_flux(self) -> int:
        return self.truncation + 1 if self.flux_terms is None else int(self.flux_terms)


ProblemSpec = Union[OnePhaseISP, ModelProblemD0, TwoPhaseISP]


def problem_kind(p) -> str:
    if isinstance(p, OnePhaseISP):
        return "one_phase"
    if isinstance(p, ModelProblemD0):
        return "model_problem"
    if isinstance(p, TwoPhaseISP):
        return "two_phase"
    raise TypeError(f"not a problem spec: {type(p).__name__}")


@dataclass(frozen=True, eq=False)
class AssembledSystem:
    """Matrix, data and bookkeeping for one problem.

    ``row_provenance[i]`` is a ``(condition, where)`` pair, ``where`` being a
    power label such as ``"t^2"`` or a collocation time ``"t=0.25"``.
    """

    matrix: np.ndarray
    rhs: np.ndarray
    unknown_labels: tuple
    row_provenance: tuple
    warnings: tuple = ()
    collocation_times: tuple = ()
    condition_number: float = field(default=float("nan"))

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        b = np.asarray(self.rhs, dtype=float).reshape(-1)
        if m.ndim != 2 or m.shape[0] != b.size:
            raise DimensionMismatchError(f"matrix {m.shape} and rhs ({b.size},) disagree")
        if m.shape[1] != len(self.unknown_labels):
            raise DimensionMismatchError("one label per unknown required")
        if m.shape[0] != len(self.row_provenance):
            raise DimensionMismatchError("one provenance entry per row required")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "rhs", b)

    @property
    def shape(self):
        return self.matrix.shape

    @property
    def is_square(self) -> bool:
        return self.matrix.shape[0] == self.matrix.shape[1]

    def index(self, label: str) -> int:
        return self.unknown_labels.index(label)


def _finish(rows, rhs, labels, prov, times=(), require_square=True):
    m = np.array(rows, dtype=float).reshape(len(rows), len(labels))
    if require_square and m.shape[0] != m.shape[1]:
        raise DimensionMismatchError(f"{m.shape[0]} equations for {m.shape[1]} unknowns")
    if m.shape[0] < m.shape[1]:
        raise DimensionMismatchError(f"underdetermined: {m.shape[0]} equations for {m.shape[1]} unknowns")
    cond = condition_number(m) if m.size else 1.0
    warn = []
    if cond > RANK_WARNING_CONDITION:
        warn.append(f"rank-deficiency warning: condition number {cond:.3e} exceeds {RANK_WARNING_CONDITION:.0e}")
    return AssembledSystem(
        matrix=m,
        rhs=np.array(rhs, dtype=float),
        unknown_labels=tuple(labels),
        row_provenance=tuple(prov),
        warnings=tuple(warn),
        collocation_times=tuple(float(t) for t in times),
        condition_number=cond,
    )


def _has_second_family(nu: float) -> bool:
    # At mu = 1 the B-family coincides with the A-family.
    return nu != 1.0


def _padded(coeffs, n, what):
    coeffs = tuple(coeffs)
    if len(coeffs) > n:
        if any(c != 0.0 for c in coeffs[n:]):
            raise AssemblyError(f"{what} has {len(coeffs)} Taylor terms but the truncation keeps {n}")
        coeffs = coeffs[:n]
    return np.array(coeffs + (0.0,) * (n - len(coeffs)), dtype=float)


def _robin_coeff(family, n, a, nu, t, beta, gamma):
    """Contribution of one basis term to ``beta theta(0,t) + gamma theta_x(0,t)``."""
    d = family_term(family, n, a, nu, 0.0, t)
    out = 0.0
    if beta != 0.0:
        if math.isnan(d.value):
            raise AssemblyError(f"{family}-family term is unbounded at x=0 for nu={nu}; Robin value undefined")
        out += beta * d.value
    if gamma != 0.0:
        if math.isnan(d.ddx):
            raise AssemblyError(f"{family}-family flux is unbounded at x=0 for nu={nu}; set robin_gamma=0")
        out += gamma * d.ddx
    return out


def chebyshev_times(k: int, horizon: float) -> np.ndarray:
    """Chebyshev-Gauss nodes mapped into ``(0, horizon)``, ascending."""
    i = np.arange(1, k + 1)
    u = np.cos((2 * i - 1) * np.pi / (2 * k))
    return np.sort(horizon * (1.0 + u) / 2.0)


# ---------------------------------------------------------------- one phase


def _one_phase_layout(p: OnePhaseISP):
    fams = ["A"] + (["B"] if _has_second_family(p.nu) else [])
    labels = [f"{f}_{n}" for f in fams for n in range(p.truncation + 1)]
    if not p.flux_known:
        labels += [f"P_{n}" for n in range(p.truncation + 1)]
    return fams, labels


def _one_phase_power_coeffs(p: OnePhaseISP, family: str, n: int):
    """Coefficients of ``t^n`` contributed by one term to isotherm, Stefan and Robin."""
    a, nu, alpha = p.diffusivity, p.nu, p.boundary_coeff
    at_front = family_term(family, n, a, nu, alpha, 1.0)
    iso = at_front.value
    stefan = p.conductivity * at_front.ddx
    if family == "B" and nu == 0.0 and p.robin_gamma != 0.0:
        raise AssemblyError("nu=0 B-family flux at x=0 scales as t^(n-1/2); power matching impossible with robin_gamma != 0")
    robin = _robin_coeff(family, n, a, nu, 1.0, p.robin_beta, p.robin_gamma)
    return iso, stefan, robin


def assemble_one_phase(p: OnePhaseISP) -> AssembledSystem:
    """Power-matching system for the one-phase inverse problem.

    Unknowns: ``A_n`` always, ``B_n`` unless ``nu = 1`` (where the families
    coincide), ``P_n`` when the flux is unknown. Rows: isotherm at every power,
    the Stefan condition (multiplied by ``sqrt t``) whenever ``B`` is present,
    and the Robin condition whenever ``P`` is unknown. Conditions without a row
    are left to :func:`boundary_residuals`.
    """
    n1 = p.truncation + 1
    if p.boundary_coeff == 0.0 and p.melt_temp != 0.0:
        raise AssemblyError("alpha = 0 collapses the melt region but T_m != 0")
    fams, labels = _one_phase_layout(p)
    col = {lab: i for i, lab in enumerate(labels)}
    iso_data = _padded(p.isotherm_taylor, n1, "boundary temperature")
    src = _padded(p.stefan_source_taylor, n1, "Stefan source")
    stefan_data = src.copy()
    stefan_data[0] += p.latent_heat * p.density * p.boundary_coeff / 2.0

    rows, rhs, prov = [], [], []
    coeffs = {(f, n): _one_phase_power_coeffs(p, f, n) for f in fams for n in range(n1)}
    families = [("isotherm", 0, iso_data)]
    if "B" in fams:
        families.append(("stefan", 1, stefan_data))
    if not p.flux_known:
        families.append(("robin", 2, np.zeros(n1)))
    for name, which, data in families:
        for n in range(n1):
            row = np.zeros(len(labels))
            for f in fams:
                row[col[f"{f}_{n}"]] = coeffs[(f, n)][which]
            if name == "robin":
                row[col[f"P_{n}"]] = -1.0
            rows.append(row)
            rhs.append(data[n])
            prov.append((name, f"t^{n}"))
    return _finish(rows, rhs, labels, prov)


# ---------------------------------------------------------------- model problem


def assemble_model_problem(p: ModelProblemD0) -> AssembledSystem:
    """Isotherm matching ``theta(alpha(t), t) = f(t)`` for the Laguerre series.

    For ``alpha(t) = alpha sqrt(t)`` the system is diagonal with entries
    ``(4 a^2)^n L_n^beta(-alpha^2 / 4a^2)``; for a polynomial front the
    isotherm is collocated at ``N + 1`` Chebyshev times.
    """
    n1 = p.truncation + 1
    a, nu = p.diffusivity, p.nu
    labels = [f"A_{n}" for n in range(n1)]
    if p.boundary.self_similar:
        alpha = p.boundary.coeffs[0]
        arg = -(alpha**2) / (4.0 * a * a)
        f = _padded(p.f_taylor, n1, "f(t)")
        rows, prov = [], []
        for n in range(n1):
            lag = laguerre(n, p.laguerre_order, arg)
            if lag == 0.0:
                raise AssemblyError(f"L_{n}^beta({arg}) vanishes; diagonal entry is zero")
            row = np.zeros(n1)
            row[n] = (4.0 * a * a) ** n * lag
            rows.append(row)
            prov.append(("isotherm", f"t^{n}"))
        return _finish(rows, f, labels, prov)
    times = chebyshev_times(n1, p.horizon)
    rows, rhs, prov = [], [], []
    for t in times:
        x = p.boundary.position(t)
        rows.append([family_term("A", n, a, nu, x, t).value for n in range(n1)])
        rhs.append(_taylor(p.f_taylor, t))
        prov.append(("isotherm", f"t={t:.12g}"))
    return _finish(rows, rhs, labels, prov, times)


def reconstruct_flux(p: ModelProblemD0, s: HeatSeries, times) -> np.ndarray:
    """``P(t) = lambda theta_r(alpha(t), t) - L rho dalpha/dt`` at each time."""
    out = []
    for t in np.atleast_1d(np.asarray(times, dtype=float)):
        if not t > 0:
            raise AssemblyError(f"flux reconstruction needs t > 0 (dalpha/dt is unbounded at t={t})")
        slope = evaluate_all(s, (p.boundary.position(t), t)).ddx
        out.append(p.conductivity * slope - p.latent_heat * p.density * p.boundary.rate(t))
    return np.array(out)


# ---------------------------------------------------------------- two phase


def _two_phase_layout(p: TwoPhaseISP):
    n1 = p.truncation + 1
    second = _has_second_family(p.nu)
    f1 = ["A"] + (["B"] if second else [])
    f2 = ["C"] + (["D"] if second else [])
    labels = [f"{f}_{n}" for f in f1 + f2 for n in range(n1)]
    labels += [f"P_{m}" for m in range(p.n_flux)]
    return f1, f2, labels


_BASIS_OF = {"A": "A", "B": "B", "C": "A", "D": "B"}


def initial_limit_weight(family: str, n: int, nu: float) -> float:
    """Coefficient of ``x^(2n)`` in the ``t -> 0`` limit of one phase-2 term.

    ``(4a^2 t)^n L_n^(mu-1)(-xi) -> x^(2n)/n!`` and
    ``(4a^2 t)^n xi^(1-mu) Phi(1-mu-n, 2-mu; -xi) -> Gamma(2-mu) x^(2n)/n!``.
    """
    mu = (nu + 1.0) / 2.0
    if family == "C":
        return 1.0 / math.factorial(n)
    try:
        return gamma_ratio(2.0 - mu, 1.0 + n)
    except SpecialFunctionError as exc:
        raise AssemblyError(f"D-family initial limit undefined for nu={nu}: {exc}") from exc


def _two_phase_data(p: TwoPhaseISP):
    iso1 = p.iso1_taylor if p.iso1_taylor is not None else (p.melt_temp,)
    iso2 = p.iso2_taylor if p.iso2_taylor is not None else (p.melt_temp,)
    return iso1, iso2


def _stefan_rhs(p, t):
    src = _taylor(p.stefan_source_taylor, t) / math.sqrt(t) if p.stefan_source_taylor else 0.0
    return p.latent_heat * p.density * p.boundary.rate(t) + src


def assemble_two_phase(p: TwoPhaseISP) -> AssembledSystem:
    """Initial-data relations plus collocated boundary conditions.

    Rows, in order: ``N + 1`` initial-profile relations, then for every
    collocation time the Robin condition, the phase-1 isotherm, the phase-2
    isotherm, the flux balance ``-l1 theta1_x + l2 theta2_x = L rho alpha'``
    and, if a cutoff ``X`` is set, ``theta2(X, t) = 0``.
    """
    n1 = p.truncation + 1
    f1, f2, labels = _two_phase_layout(p)
    col = {lab: i for i, lab in enumerate(labels)}
    iso1, iso2 = _two_phase_data(p)
    prof = _padded(p.initial_profile_taylor, n1, "initial profile")
    times = chebyshev_times(p.collocation_count, p.horizon)

    n_rows = n1 + len(times) * (5 if p.far_field_cutoff is not None else 4)
    if n_rows < len(labels):
        raise DimensionMismatchError(
            f"{n_rows} equations for {len(labels)} unknowns; raise collocation_count or lower the truncation"
        )

    rows, rhs, prov = [], [], []
    for n in range(n1):
        row = np.zeros(len(labels))
        for f in f2:
            row[col[f"{f}_{n}"]] = initial_limit_weight(f, n, p.nu)
        rows.append(row)
        rhs.append(prof[n])
        prov.append(("initial_profile", f"x^{2 * n}"))

    for t in times:
        where = f"t={t:.12g}"
        front = p.boundary.position(t)
        r_robin = np.zeros(len(labels))
        r_iso1 = np.zeros(len(labels))
        r_iso2 = np.zeros(len(labels))
        r_stefan = np.zeros(len(labels))
        r_far = np.zeros(len(labels))
        for n in range(n1):
            for f in f1:
                d = family_term(_BASIS_OF[f], n, p.a1, p.nu, front, t)
                r_robin[col[f"{f}_{n}"]] = _robin_coeff(_BASIS_OF[f], n, p.a1, p.nu, t, p.robin_beta, p.robin_gamma)
                r_iso1[col[f"{f}_{n}"]] = d.value
                r_stefan[col[f"{f}_{n}"]] = -p.conductivity1 * d.ddx
            for f in f2:
                d = family_term(_BASIS_OF[f], n, p.a2, p.nu, front, t)
                r_iso2[col[f"{f}_{n}"]] = d.value
                r_stefan[col[f"{f}_{n}"]] = p.conductivity2 * d.ddx
                if p.far_field_cutoff is not None:
                    r_far[col[f"{f}_{n}"]] = family_term(_BASIS_OF[f], n, p.a2, p.nu, p.far_field_cutoff, t).value
        for m in range(p.n_flux):
            r_robin[col[f"P_{m}"]] = -(t**m)
        block = [
            ("robin", r_robin, 0.0),
            ("isotherm1", r_iso1, _taylor(iso1, t)),
            ("isotherm2", r_iso2, _taylor(iso2, t)),
            ("stefan", r_stefan, _stefan_rhs(p, t)),
        ]
        if p.far_field_cutoff is not None:
            block.append(("far_field", r_far, 0.0))
        for name, row, val in block:
            rows.append(row)
            rhs.append(val)
            prov.append((name, where))
    return _finish(rows, rhs, labels, prov, times, require_square=False)


# ---------------------------------------------------------------- shared


def assemble(p) -> AssembledSystem:
    kind = problem_kind(p)
    if kind == "one_phase":
        return assemble_one_phase(p)
    if kind == "model_problem":
        return assemble_model_problem(p)
    return assemble_two_phase(p)


@dataclass(frozen=True)
class StefanSolution:
    phase1: HeatSeries
    phase2: HeatSeries | None = None
    flux_taylor: tuple | None = None


def _coeffs(values: dict, fam: str, n1: int) -> np.ndarray:
    return np.array([values.get(f"{fam}_{n}", 0.0) for n in range(n1)])


def unpack_solution(p, asm: AssembledSystem, x) -> StefanSolution:
    """Turn a solution vector (real part taken) into heat series."""
    x = np.real_if_close(np.asarray(x), tol=1e6)
    values = {lab: float(np.real(v)) for lab, v in zip(asm.unknown_labels, x)}
    kind = problem_kind(p)
    n1 = p.truncation + 1
    flux_labels = sorted((lab for lab in values if lab.startswith("P_")), key=lambda s: int(s[2:]))
    flux = tuple(values[lab] for lab in flux_labels) or None
    if kind == "one_phase":
        s = HeatSeries(p.diffusivity, p.nu, _coeffs(values, "A", n1), _coeffs(values, "B", n1))
        return StefanSolution(s, None, p.flux_taylor if p.flux_known else flux)
    if kind == "model_problem":
        return StefanSolution(HeatSeries(p.diffusivity, p.nu, _coeffs(values, "A", n1)))
    s1 = HeatSeries(p.a1, p.nu, _coeffs(values, "A", n1), _coeffs(values, "B", n1))
    s2 = HeatSeries(p.a2, p.nu, _coeffs(values, "C", n1), _coeffs(values, "D", n1))
    return StefanSolution(s1, s2, flux)


def pack_solution(p, asm: AssembledSystem, sol: StefanSolution) -> np.ndarray:
    """Inverse of :func:`unpack_solution`, in ``asm.unknown_labels`` order."""
    values = {}
    for fam, arr in (("A", sol.phase1.coeffs_a), ("B", sol.phase1.coeffs_b)):
        values.update({f"{fam}_{n}": v for n, v in enumerate(arr)})
    if sol.phase2 is not None:
        for fam, arr in (("C", sol.phase2.coeffs_a), ("D", sol.phase2.coeffs_b)):
            values.update({f"{fam}_{n}": v for n, v in enumerate(arr)})
    if sol.flux_taylor is not None:
        values.update({f"P_{m}": v for m, v in enumerate(sol.flux_taylor)})
    return np.array([values.get(lab, 0.0) for lab in asm.unknown_labels])


def flux_value(p, sol: StefanSolution, t: float) -> float:
    if problem_kind(p) == "model_problem":
        return float(reconstruct_flux(p, sol.phase1, [t])[0])
    if sol.flux_taylor is None:
        raise AssemblyError("solution carries no flux coefficients")
    return _taylor(sol.flux_taylor, t)


def _robin_residual(series, beta, gamma, t, flux):
    d = evaluate_all(series, (0.0, t))
    lhs = 0.0
    if beta != 0.0:
        lhs += beta * d.value
    if gamma != 0.0:
        lhs += gamma * d.ddx
    return abs(lhs - flux)


def boundary_residuals(p, sol: StefanSolution, probe_times) -> ResidualReport:
    """Absolute residual of every boundary condition at each probe time."""
    kind = problem_kind(p)
    labels, per, pts = [], [], []

    def add(name, t, r):
        labels.append(name)
        per.append(float(r))
        pts.append(float(t))

    for t in np.atleast_1d(np.asarray(probe_times, dtype=float)):
        if not t > 0:
            raise ValueError("probe times must be > 0")
        if kind == "one_phase":
            front = p.boundary_coeff * math.sqrt(t)
            d = evaluate_all(sol.phase1, (front, t))
            add("isotherm", t, abs(d.value - _taylor(p.isotherm_taylor, t)))
            src = _taylor(p.stefan_source_taylor, t) / math.sqrt(t) if p.stefan_source_taylor else 0.0
            target = p.latent_heat * p.density * p.boundary_coeff / (2.0 * math.sqrt(t)) + src
            add("stefan", t, abs(p.conductivity * d.ddx - target))
            if sol.flux_taylor is not None:
                add("robin", t, _robin_residual(sol.phase1, p.robin_beta, p.robin_gamma, t, _taylor(sol.flux_taylor, t)))
        elif kind == "model_problem":
            d = evaluate_all(sol.phase1, (p.boundary.position(t), t))
            add("isotherm", t, abs(d.value - _taylor(p.f_taylor, t)))
        else:
            iso1, iso2 = _two_phase_data(p)
            front = p.boundary.position(t)
            d1 = evaluate_all(sol.phase1, (front, t))
            d2 = evaluate_all(sol.phase2, (front, t))
            add("robin", t, _robin_residual(sol.phase1, p.robin_beta, p.robin_gamma, t, _taylor(sol.flux_taylor or (), t)))
            add("isotherm1", t, abs(d1.value - _taylor(iso1, t)))
            add("isotherm2", t, abs(d2.value - _taylor(iso2, t)))
            lhs = -p.conductivity1 * d1.ddx + p.conductivity2 * d2.ddx
            add("stefan", t, abs(lhs - _stefan_rhs(p, t)))
            if p.far_field_cutoff is not None:
                add("far_field", t, abs(evaluate_all(sol.phase2, (p.far_field_cutoff, t)).value))
    if any(math.isnan(r) for r in per):
        raise AssemblyError("a boundary residual is undefined (singular basis at x=0)")
    return ResidualReport(max(per) if per else 0.0, tuple(pts), tuple(per), tuple(labels))


# ---------------------------------------------------------------- manufactured data


def _power_coeffs_at(series: HeatSeries, x_over_sqrt_t: float):
    """Taylor coefficients in ``t`` of ``theta(c sqrt t, t)`` and of ``sqrt(t) theta_x(c sqrt t, t)``."""
    vals, slopes = [], []
    for n in range(series.truncation + 1):
        v = s = 0.0
        for fam, coef in (("A", series.coeffs_a[n]), ("B", series.coeffs_b[n])):
            if coef != 0.0:
                d = family_term(fam, n, series.diffusivity, series.nu, x_over_sqrt_t, 1.0)
                v += coef * d.value
                s += coef * d.ddx
        vals.append(v)
        slopes.append(s)
    return np.array(vals), np.array(slopes)


def _robin_power_coeffs(series: HeatSeries, beta, gamma):
    out = []
    for n in range(series.truncation + 1):
        c = 0.0
        for fam, coef in (("A", series.coeffs_a[n]), ("B", series.coeffs_b[n])):
            if coef != 0.0:
                c += coef * _robin_coeff(fam, n, series.diffusivity, series.nu, 1.0, beta, gamma)
        out.append(c)
    return np.array(out)


def _floats(v) -> tuple:
    return tuple(float(c) for c in v)


def manufactured_flux(p, sol: StefanSolution) -> tuple:
    """Taylor coefficients of ``beta theta(0,t) + gamma theta_x(0,t)`` for ``sol.phase1``."""
    flux = _floats(_robin_power_coeffs(sol.phase1, p.robin_beta, p.robin_gamma))
    n_flux = p.n_flux if problem_kind(p) == "two_phase" else p.truncation + 1
    if any(f != 0.0 for f in flux[n_flux:]):
        raise AssemblyError("manufactured flux needs more terms than flux_terms allows")
    return flux[:n_flux]


def synthesize_data(p, sol: StefanSolution):
    """Return a copy of ``p`` whose boundary data are generated by ``sol``.

    This is the forward half of a manufactured-solution round trip: the
    returned problem, once assembled and solved, should give back ``sol``
    (the matching flux is :func:`manufactured_flux`). Requires a self-similar
    front ``alpha sqrt(t)`` so that every datum is a finite Taylor series.
    """
    kind = problem_kind(p)
    if kind == "one_phase":
        vals, slopes = _power_coeffs_at(sol.phase1, p.boundary_coeff)
        src = p.conductivity * slopes
        src[0] -= p.latent_heat * p.density * p.boundary_coeff / 2.0
        return replace(
            p,
            boundary_temp_taylor=_floats(vals),
            stefan_source_taylor=_floats(src),
            flux_taylor=manufactured_flux(p, sol) if p.flux_known else UNKNOWN,
        )
    if not p.boundary.self_similar:
        raise AssemblyError("manufactured data need a sqrt boundary")
    if kind == "model_problem":
        vals, _ = _power_coeffs_at(sol.phase1, p.boundary.coeffs[0])
        return replace(p, f_taylor=_floats(vals))
    if p.far_field_cutoff is not None:
        raise AssemblyError("far-field rows carry homogeneous data only; clear far_field_cutoff")
    c = p.boundary.coeffs[0]
    v1, s1 = _power_coeffs_at(sol.phase1, c)
    v2, s2 = _power_coeffs_at(sol.phase2, c)
    src = -p.conductivity1 * s1 + p.conductivity2 * s2
    src[0] -= p.latent_heat * p.density * c / 2.0
    prof = []
    for n in range(p.truncation + 1):
        v = initial_limit_weight("C", n, p.nu) * sol.phase2.coeffs_a[n]
        if sol.phase2.coeffs_b[n] != 0.0:
            v += initial_limit_weight("D", n, p.nu) * sol.phase2.coeffs_b[n]
        prof.append(v)
    return replace(
        p,
        iso1_taylor=_floats(v1),
        iso2_taylor=_floats(v2),
        stefan_source_taylor=_floats(src),
        initial_profile_taylor=_floats(prof),
    )
