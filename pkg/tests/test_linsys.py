import io
import logging

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qstefan.errors import LinearSystemError, SingularMatrixError
from qstefan.linsys import (
    LinearSystem,
    classical_solve,
    condition_number,
    dump_matrix,
    extract_embedded,
    hermitian_embed,
    is_hermitian,
    least_squares_solve,
    load_matrix,
    normal_equations,
    pad_to_power_of_two,
    scale_spectrum,
)


def random_system(rng, m, hermitian=False):
    a = rng.normal(size=(m, m)) + 1j * rng.normal(size=(m, m))
    if hermitian:
        a = a + a.conj().T
    a += m * np.eye(m)
    b = rng.normal(size=m) + 1j * rng.normal(size=m)
    return LinearSystem(a, b, hermitian=hermitian)


def test_linear_system_invariants():
    with pytest.raises(LinearSystemError):
        LinearSystem(np.ones((2, 3)), [1, 2])
    with pytest.raises(LinearSystemError):
        LinearSystem(np.eye(2), [1, 2, 3])
    with pytest.raises(LinearSystemError):
        LinearSystem([[1, 2], [3, 4]], [1, 0], hermitian=True)
    s = LinearSystem(np.eye(2), [1, 0])
    assert s.matrix.dtype == complex and not s.matrix.flags.writeable


def test_embed_example():
    e = hermitian_embed(LinearSystem([[2.0]], [4.0]))
    np.testing.assert_array_equal(e.matrix, [[0, 2], [2, 0]])
    np.testing.assert_array_equal(e.rhs, [4, 0])
    y = classical_solve(e).x
    np.testing.assert_allclose(y, [0, 2], atol=1e-15)
    np.testing.assert_allclose(extract_embedded(y, 1), [2.0])


def test_embed_hermitian_input():
    rng = np.random.default_rng(1)
    s = random_system(rng, 3, hermitian=True)
    x = classical_solve(s).x
    y = classical_solve(hermitian_embed(s)).x
    np.testing.assert_allclose(extract_embedded(y, 3), x, rtol=1e-10, atol=1e-12)


def test_embed_zero_matrix_is_singular_downstream():
    with pytest.raises(SingularMatrixError):
        classical_solve(hermitian_embed(LinearSystem(np.zeros((2, 2)), [1, 1])))


@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_embedding_equivalence(m, seed):
    s = random_system(np.random.default_rng(seed), m)
    e = hermitian_embed(s)
    assert is_hermitian(e.matrix, rtol=0.0) and e.hermitian
    x = classical_solve(s).x
    got = extract_embedded(classical_solve(e).x, m)
    assert np.linalg.norm(got - x) <= 1e-10 * np.linalg.norm(x)


def test_extract_warns_on_nonzero_upper_block(caplog):
    with caplog.at_level(logging.WARNING, logger="qstefan.linsys"):
        extract_embedded(np.array([1e-3, 1.0]), 1)
    assert "upper block" in caplog.text
    with pytest.raises(LinearSystemError):
        extract_embedded(np.zeros(3), 1)


def test_padding():
    rng = np.random.default_rng(3)
    s = random_system(rng, 3)
    p = pad_to_power_of_two(s)
    assert p.size == 4
    np.testing.assert_array_equal(p.matrix[3], [0, 0, 0, 1])
    assert p.rhs[3] == 0
    np.testing.assert_allclose(classical_solve(p).x[:3], classical_solve(s).x, rtol=1e-12)
    s4 = random_system(rng, 4)
    assert pad_to_power_of_two(s4) is s4
    s1 = LinearSystem([[3.0]], [1.0])
    assert pad_to_power_of_two(s1) is s1
    assert pad_to_power_of_two(s1, min_size=2).size == 2


def test_scale_spectrum_examples():
    s = LinearSystem(np.diag([4.0, 8.0]), [1, 1], hermitian=True)
    scaled, sc = scale_spectrum(s)
    assert sc.scale == 1 / 16 and sc.original_extent == pytest.approx(8.0)
    ev = np.linalg.eigvalsh(scaled.matrix)
    assert np.max(np.abs(ev)) <= 0.5
    np.testing.assert_allclose(sc.unscale(classical_solve(scaled).x), classical_solve(s).x, rtol=1e-14)

    inband = LinearSystem(np.diag([0.1, -0.3]), [1, 1], hermitian=True)
    assert scale_spectrum(inband)[1].scale == 1.0

    neg = LinearSystem(np.diag([-4.0, 8.0]), [1, 1], hermitian=True)
    scaled, sc = scale_spectrum(neg)
    assert np.linalg.eigvalsh(scaled.matrix)[0] < 0
    np.testing.assert_allclose(sc.unscale(classical_solve(scaled).x), [-0.25, 0.125], rtol=1e-14)


def test_scale_spectrum_errors():
    with pytest.raises(LinearSystemError):
        scale_spectrum(LinearSystem(np.zeros((2, 2)), [1, 0], hermitian=True))
    with pytest.raises(LinearSystemError):
        scale_spectrum(LinearSystem([[1, 2], [3, 4]], [1, 0]))


@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_pad_and_scale_solution_invariant(m, seed):
    s = random_system(np.random.default_rng(seed), m, hermitian=True)
    ref = classical_solve(s).x
    scaled, sc = scale_spectrum(pad_to_power_of_two(s))
    got = sc.unscale(classical_solve(scaled).x)[:m]
    assert np.linalg.norm(got - ref) <= 1e-10 * np.linalg.norm(ref)


def test_classical_examples():
    r = classical_solve(LinearSystem([[1, -1 / 3], [-1 / 3, 1]], [1, 0]))
    np.testing.assert_allclose(r.x, [1.125, 0.375], rtol=1e-14)
    assert r.condition == pytest.approx(2.0, rel=1e-12)
    b = np.array([1 + 2j, -3, 0.5j])
    np.testing.assert_array_equal(classical_solve(LinearSystem(np.eye(3), b)).x, b)


def test_classical_singular():
    with pytest.raises(SingularMatrixError) as exc:
        classical_solve(LinearSystem([[1, 1], [1, 1]], [1, 0]))
    assert exc.value.pivot == 1


@given(st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_classical_residual_bound(m, seed):
    s = random_system(np.random.default_rng(seed), m)
    x = classical_solve(s).x
    a, b = np.asarray(s.matrix), np.asarray(s.rhs)
    assert np.linalg.norm(a @ x - b) <= 1e-10 * (np.linalg.norm(a, 2) * np.linalg.norm(x) + np.linalg.norm(b))


def test_condition_number():
    assert condition_number(np.diag([1.0, 4.0])) == pytest.approx(4.0)
    assert condition_number(np.zeros((2, 2))) == np.inf


def test_tall_systems():
    rng = np.random.default_rng(5)
    a = rng.normal(size=(6, 3))
    x = rng.normal(size=3)
    b = a @ x
    np.testing.assert_allclose(least_squares_solve(a, b).x, x, rtol=1e-12)
    ne = normal_equations(a, b)
    assert ne.hermitian and ne.size == 3
    np.testing.assert_allclose(classical_solve(ne).x, x, rtol=1e-10)
    with pytest.raises(SingularMatrixError):
        least_squares_solve(np.ones((4, 2)), np.ones(4))


def test_matrix_dump_round_trip():
    m = np.array([[1 + 2j, -0.5], [1e-20j, 3.25 - 1j]])
    text = dump_matrix(m)
    assert text.splitlines()[0] == "2"
    assert text.splitlines()[1] == "1.0 2.0 -0.5 0.0"
    np.testing.assert_array_equal(load_matrix(text), m)
    buf = io.StringIO()
    dump_matrix(m, buf)
    buf.seek(0)
    np.testing.assert_array_equal(load_matrix(buf), m)
    with pytest.raises(LinearSystemError):
        load_matrix("2\n1 0 0 0\n")
