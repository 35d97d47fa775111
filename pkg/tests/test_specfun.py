import itertools
import math

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from conftest import mp_kummer, mp_laguerre
from qstefan import _kernels_py, kernels
from qstefan.errors import NonConvergenceError, PoleError, SingularityError
from qstefan.specfun import (
    BasisParams,
    EvalPoint,
    basis_d2dx,
    basis_ddt,
    basis_ddx,
    gamma_ratio,
    kummer_phi,
    laguerre,
    ln_gamma,
    pochhammer,
    s1_basis,
    s1_small_z_limit,
    s2_basis,
)

KUMMER_A = (-3.0, -1.5, -0.5, 0.25, 1.0, 2.5)
KUMMER_B = (0.5, 1.0, 1.5, 3.25)
KUMMER_Z = (-50.0, -20.0, -5.0, -0.5, 0.0, 0.5, 5.0, 20.0, 50.0)
LAG_N = range(13)
LAG_ALPHA = (-0.5, 0.0, 0.5, 1.5, 3.0)
LAG_X = (-20.0, -5.0, -1.0, 0.0, 0.5, 2.0, 7.0, 15.0)


def rel(a, b):
    return abs(a - b) / abs(b) if b != 0 else abs(a)


# ---- ln_gamma


def test_ln_gamma_examples():
    assert ln_gamma(1.0) == (0.0, 1)
    v, s = ln_gamma(0.5)
    assert s == 1 and v == pytest.approx(0.5723649429, abs=1e-10)
    assert rel(v, float(mpmath.log(mpmath.sqrt(mpmath.pi)))) <= 1e-12
    v, s = ln_gamma(5.0)
    assert v == pytest.approx(math.log(24.0), rel=1e-14) and s == 1


@pytest.mark.parametrize("z", [0.0, -1.0, -7.0])
def test_ln_gamma_poles(z):
    with pytest.raises(PoleError):
        ln_gamma(z)


def test_ln_gamma_accuracy_grid():
    for z in np.linspace(0.5, 170.0, 400):
        v, s = ln_gamma(z)
        ref = float(mpmath.loggamma(mpmath.mpf(z)))
        assert s == 1
        assert abs(v - ref) <= 1e-12 * max(1.0, abs(ref))


@given(st.floats(-30.0, -0.01).filter(lambda z: abs(z - round(z)) > 1e-3))
def test_ln_gamma_sign_negative_axis(z):
    v, s = ln_gamma(z)
    g = mpmath.gamma(mpmath.mpf(z))
    assert s == (1 if g > 0 else -1)
    assert v == pytest.approx(float(mpmath.log(abs(g))), rel=1e-10, abs=1e-10)


def test_gamma_ratio_matches_oracle():
    assert gamma_ratio(1.5, 2.0) == pytest.approx(float(mpmath.gamma(1.5) / mpmath.gamma(2)), rel=1e-13)


# ---- pochhammer


def test_pochhammer_examples():
    assert pochhammer(2.7, 0) == 1.0
    assert pochhammer(2.7, 1) == 2.7
    assert pochhammer(3.0, 4) == 3 * 4 * 5 * 6 == 360


def test_pochhammer_through_gamma_pole():
    # (-2)_3 = (-2)(-1)(0) = 0 even though Gamma(-2) is a pole.
    assert pochhammer(-2.0, 3) == 0.0
    with pytest.raises(ValueError):
        pochhammer(1.0, -1)


@given(st.floats(-10, 10), st.integers(0, 15))
def test_pochhammer_recurrence(beta, n):
    assert pochhammer(beta, n + 1) == pytest.approx(pochhammer(beta, n) * (beta + n), rel=1e-12, abs=1e-300)


# ---- kummer


def test_kummer_examples():
    assert kummer_phi(0.3, 1.7, 0.0) == 1.0
    assert kummer_phi(0.0, 1.7, -4.0) == 1.0
    assert rel(kummer_phi(1.0, 1.0, 1.0), math.e) <= 1e-14
    assert kummer_phi(1.0, 1.0, 1.0) == pytest.approx(2.7182818285, abs=1e-10)
    for mu, z in [(0.75, 2.0), (1.5, -3.0), (4.0, 10.0)]:
        assert kummer_phi(-1.0, mu, z) == pytest.approx(1 - z / mu, rel=1e-15)


def test_kummer_erf_identity():
    # 1F1(1/2; 3/2; -z^2) = sqrt(pi) erf(z) / (2 z)
    for z in (0.1, 0.5, 1.0, 2.0, 4.0, 7.0):
        ref = math.sqrt(math.pi) * math.erf(z) / (2 * z)
        assert rel(kummer_phi(0.5, 1.5, -z * z), ref) <= 1e-12


def test_kummer_poles():
    with pytest.raises(PoleError):
        kummer_phi(0.5, -2.0, 1.0)
    with pytest.raises(PoleError):
        kummer_phi(-3.0, -1.0, 1.0)
    # terminates before the b-pole is reached
    assert kummer_phi(-1.0, -2.0, 1.0) == pytest.approx(1.5)


def test_kummer_nonconvergence():
    with pytest.raises(NonConvergenceError):
        kummer_phi(0.5, 1.5, 5000.0)


@pytest.mark.parametrize("a,b,z", list(itertools.product(KUMMER_A, KUMMER_B, KUMMER_Z)))
def test_kummer_oracle_grid(a, b, z):
    assert rel(kummer_phi(a, b, z), mp_kummer(a, b, z)) <= 1e-10


def _float_terms(a, b, z, count=500):
    t, out = 1.0, [1.0]
    for k in range(count - 1):
        t *= (a + k) * z / ((b + k) * (k + 1.0))
        if t == 0.0:
            break
        out.append(t)
    return out


@given(st.integers(0, 12), st.floats(0.1, 6.0), st.floats(-20.0, 20.0))
def test_kummer_terminating_exact(n, b, z):
    terms = _float_terms(-n, b, z)
    oracle = math.fsum(terms)
    got = kummer_phi(-n, b, z)
    assert abs(got - oracle) <= 1e-12 * max(abs(oracle), 1e-300)
    # against exact arithmetic the only loss is the rounding of each term
    scale = math.fsum(abs(t) for t in terms)
    assert abs(got - mp_kummer(-n, b, z)) <= 1e-14 * n * scale + 1e-15 * scale


@given(st.floats(-3.0, 3.0), st.floats(0.3, 5.0), st.floats(-30.0, 30.0))
def test_kummer_transformation(a, b, z):
    # b - a must round-trip, otherwise the two sides see different parameters
    assume(b - (b - a) == a)
    lhs = kummer_phi(a, b, z)
    rhs = math.exp(z) * kummer_phi(b - a, b, -z)
    assert abs(lhs - rhs) <= 1e-9 * max(abs(lhs), abs(rhs), 1e-300) + 1e-300


# ---- laguerre


def test_laguerre_examples():
    assert laguerre(0, 0.7, 3.3) == 1.0
    assert laguerre(1, 0.5, 2.0) == pytest.approx(-0.5, abs=1e-15)
    assert laguerre(3, 0.0, 0.0) == pytest.approx(1.0, abs=1e-15)
    for n, alpha in [(4, 0.5), (6, 2.0), (9, -0.5)]:
        assert laguerre(n, alpha, 0.0) == pytest.approx(pochhammer(alpha + 1, n) / math.factorial(n), rel=1e-13)


@pytest.mark.parametrize("n,alpha,x", list(itertools.product(LAG_N, LAG_ALPHA, LAG_X)))
def test_laguerre_oracle_grid(n, alpha, x):
    assert rel(laguerre(n, alpha, x), mp_laguerre(n, alpha, x)) <= 1e-10


IDENTITY_ALPHA = (-0.5, 0.0, 0.5, 1.0, 2.0)
IDENTITY_X = np.linspace(-10.0, 10.0, 21)


def test_laguerre_kummer_identity():
    for n, alpha, x in itertools.product(range(13), IDENTITY_ALPHA, IDENTITY_X):
        lag = laguerre(n, alpha, x)
        via = pochhammer(alpha + 1, n) / math.factorial(n) * kummer_phi(-n, alpha + 1, x)
        assert abs(lag - via) <= 1e-9 * (1 + abs(lag))


def test_laguerre_three_term_recurrence():
    for n, alpha, x in itertools.product(range(1, 12), IDENTITY_ALPHA, IDENTITY_X):
        lhs = (n + 1) * laguerre(n + 1, alpha, x)
        rhs = (2 * n + 1 + alpha - x) * laguerre(n, alpha, x) - (n + alpha) * laguerre(n - 1, alpha, x)
        assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(lhs))


# ---- bases


def _p(g, nu, a=1.0):
    return BasisParams(float(g), float(nu), float(a))


def test_s1_examples():
    for x, t in [(0.0, 0.1), (1.3, 2.0)]:
        assert s1_basis(_p(0, 0.7), EvalPoint(x, t)) == 1.0
    assert s1_basis(_p(2, 1), EvalPoint(2.0, 1.0)) == pytest.approx(8.0, rel=1e-15)
    for nu, a, x, t in [(0.0, 1.0, 0.5, 0.3), (2.5, 0.7, 1.2, 1.5), (-0.4, 2.0, 3.0, 0.2)]:
        assert s1_basis(_p(2, nu, a), EvalPoint(x, t)) == pytest.approx(4 * a * a * t + 2 * x * x / (nu + 1), rel=1e-13)


@given(st.integers(0, 6), st.floats(-0.9, 3.0), st.floats(0.0, 4.0), st.floats(0.05, 3.0))
def test_s1_even_order_is_laguerre(n, nu, x, t):
    mu = (nu + 1) / 2
    lhs = s1_basis(_p(2 * n, nu), EvalPoint(x, t))
    rhs = (4 * t) ** n * math.factorial(n) / pochhammer(mu, n) * laguerre(n, mu - 1, -x * x / (4 * t))
    assert lhs == pytest.approx(rhs, rel=1e-10)


def test_s2_examples():
    p, pt = _p(3, 1), EvalPoint(0.8, 0.6)
    reduced = (2 * math.sqrt(0.6)) ** 3 * kummer_phi(-1.5, 1.0, -0.64 / 2.4)
    assert s2_basis(p, pt) == pytest.approx(reduced, rel=1e-14)
    ref = 0.5 * math.sqrt(math.pi) * math.erf(0.5) / (2 * 0.5)
    assert s2_basis(_p(0, 0), EvalPoint(1.0, 1.0)) == pytest.approx(ref, rel=1e-13)
    # the quoted 0.4615 carries a rounded 0.9230 for the Kummer factor (exact: 0.92256)
    assert s2_basis(_p(0, 0), EvalPoint(1.0, 1.0)) == pytest.approx(0.4615, abs=5e-4)
    for nu in (-1.0, 0.0, 0.5):
        assert s2_basis(_p(0, nu), EvalPoint(0.0, 0.7)) == 0.0


def test_s2_singular_at_origin():
    with pytest.raises(SingularityError):
        s2_basis(_p(2, 2.5), EvalPoint(0.0, 1.0))
    with pytest.raises(SingularityError):
        basis_ddx("S2", _p(2, 0.5), EvalPoint(0.0, 1.0))


def test_s1_small_z_limit():
    assert s1_small_z_limit(0.0, 0.8) == pytest.approx(1.0, rel=1e-15)
    assert s1_small_z_limit(2.0, 1.0) == pytest.approx(1.0, rel=1e-14)
    assert s1_small_z_limit(1.0, 1.5) == pytest.approx(0.8862269255, abs=1e-10)
    with pytest.raises(PoleError):
        s1_small_z_limit(2.0, 0.0)


def test_s1_small_z_limit_is_large_argument_coefficient():
    # z^-beta Phi(-beta/2, mu; -z^2) tends to the ratio as z grows.
    beta, mu = 1.0, 1.5
    z = 6.0
    val = z**-beta * kummer_phi(-beta / 2, mu, -z * z)
    assert val == pytest.approx(s1_small_z_limit(beta, mu), rel=2e-2)


def test_derivative_examples():
    pt = EvalPoint(1.4, 0.9)
    assert basis_ddx("S1", _p(0, 1.3), pt) == 0.0
    assert basis_ddt("S1", _p(0, 1.3), pt) == 0.0
    for nu, a in [(0.0, 1.0), (2.0, 0.5), (2.5, 1.7)]:
        assert basis_ddx("S1", _p(2, nu, a), pt) == pytest.approx(4 * pt.x / (nu + 1), rel=1e-13)
        assert basis_ddt("S1", _p(2, nu, a), pt) == pytest.approx(4 * a * a, rel=1e-13)


def _fd(f, v, h):
    return (f(v + h) - f(v - h)) / (2 * h)


FD_CASES = [
    (kind, g, nu, a, x, t)
    for kind in ("S1", "S2")
    for g, nu, a, x, t in [
        (4, 2.0, 1.0, 1.0, 1.0),
        (1, 0.0, 0.8, 0.7, 0.3),
        (3, 2.5, 1.3, 2.2, 1.7),
        (2, -0.5, 0.6, 0.4, 0.5),
        (0, 1.0, 1.0, 3.0, 0.25),
    ]
]


@pytest.mark.parametrize("kind,g,nu,a,x,t", FD_CASES)
def test_derivatives_match_central_differences(kind, g, nu, a, x, t):
    p = _p(g, nu, a)
    val = s1_basis if kind == "S1" else s2_basis
    h = 1e-5 * max(1.0, abs(x))
    fx = _fd(lambda v: val(p, EvalPoint(v, t)), x, h)
    ft = _fd(lambda v: val(p, EvalPoint(x, v)), t, 1e-5 * t)
    fxx = _fd(lambda v: basis_ddx(kind, p, EvalPoint(v, t)), x, h)
    for got, ref in [(basis_ddx(kind, p, EvalPoint(x, t)), fx), (basis_ddt(kind, p, EvalPoint(x, t)), ft),
                     (basis_d2dx(kind, p, EvalPoint(x, t)), fxx)]:
        assert abs(got - ref) <= 1e-6 * max(1.0, abs(ref))


@pytest.mark.parametrize("kind", ["S1", "S2"])
@pytest.mark.parametrize("g", [0, 1, 2, 3, 4])
@pytest.mark.parametrize("nu", [0.0, 1.0, 2.0, 2.5])
def test_bases_solve_generalized_heat_equation(kind, g, nu):
    a = 0.9
    p = _p(g, nu, a)
    for x, t in itertools.product(np.linspace(0.1, 5.0, 6), np.linspace(0.1, 2.0, 5)):
        pt = EvalPoint(x, t)
        val = s1_basis(p, pt) if kind == "S1" else s2_basis(p, pt)
        lhs = basis_ddt(kind, p, pt)
        rhs = a * a * (basis_d2dx(kind, p, pt) + nu / x * basis_ddx(kind, p, pt))
        assert abs(lhs - rhs) <= 1e-8 * max(1.0, abs(val))


# ---- backends


def test_backend_selected():
    assert kernels.BACKEND in ("cython", "python")


@pytest.mark.skipif(kernels.BACKEND != "cython", reason="compiled kernels not built")
def test_backends_agree():
    from qstefan import _kernels as fast

    for a, b, z in itertools.product((-2.5, 0.25, 1.5), (0.5, 2.0), (0.1, 3.0, 25.0)):
        assert fast.hyp1f1_series(a, b, z) == _kernels_py.hyp1f1_series(a, b, z)
    for n, b, z in itertools.product(range(8), (0.5, 2.0), (-4.0, 3.0)):
        assert fast.hyp1f1_terminating(n, b, z) == _kernels_py.hyp1f1_terminating(n, b, z)
    for n, al, x in itertools.product(range(10), (-0.5, 1.0), (-3.0, 0.0, 6.0)):
        assert fast.laguerre(n, al, x) == _kernels_py.laguerre(n, al, x)
        assert fast.pochhammer(al, n) == _kernels_py.pochhammer(al, n)
    zs = np.linspace(0, 10, 7)
    np.testing.assert_array_equal(fast.hyp1f1_array(0.5, 1.5, zs), _kernels_py.hyp1f1_array(0.5, 1.5, zs))
    np.testing.assert_array_equal(fast.laguerre_array(5, 0.5, zs), _kernels_py.laguerre_array(5, 0.5, zs))
    with pytest.raises(NonConvergenceError):
        fast.hyp1f1_series(0.5, 1.5, 5000.0)


def test_pure_python_backend_forced(monkeypatch):
    import importlib
    import subprocess
    import sys

    out = subprocess.run(
        [sys.executable, "-c", "import qstefan.kernels as k; print(k.BACKEND)"],
        env={**__import__("os").environ, "QSTEFAN_PURE_PYTHON": "1"},
        capture_output=True,
        text=True,
        check=True,
    )
    assert out.stdout.strip() == "python"
    assert importlib.import_module("qstefan._kernels_py").MAX_TERMS == 500
