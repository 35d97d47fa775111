"""Dense linear-system utilities feeding the classical and HHL solvers.

Hermitian embedding, power-of-two padding, power-of-two spectral scaling,
a pivot-checked LU solve that serves as the reference answer, and a plain
text matrix dump.
"""

from __future__ import annotations

import io
import logging
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla

from .errors import LinearSystemError, SingularMatrixError

log = logging.getLogger(__name__)

HERMITIAN_RTOL = 1e-12
PIVOT_RTOL = 1e-13
SPECTRAL_BAND = 0.5


@dataclass(frozen=True, eq=False)
class LinearSystem:
    matrix: np.ndarray
    rhs: np.ndarray
    hermitian: bool = False
    provenance: tuple = field(default=())

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        b = np.array(self.rhs, dtype=complex).reshape(-1)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise LinearSystemError(f"matrix must be square, got shape {m.shape}")
        if b.size != m.shape[0]:
            raise LinearSystemError(f"rhs has {b.size} entries for a {m.shape[0]}x{m.shape[0]} matrix")
        if self.hermitian and not is_hermitian(m):
            raise LinearSystemError("system flagged hermitian but M != M^dagger")
        m.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "rhs", b)
        object.__setattr__(self, "provenance", tuple(self.provenance))

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_assembled(cls, asm) -> "LinearSystem":
        m = np.asarray(asm.matrix)
        return cls(m, asm.rhs, hermitian=is_hermitian(m), provenance=tuple(asm.row_provenance))


def is_hermitian(m: np.ndarray, rtol: float = HERMITIAN_RTOL) -> bool:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    scale = np.max(np.abs(m)) if m.size else 0.0
    return bool(np.max(np.abs(m - m.conj().T), initial=0.0) <= rtol * scale)


def hermitian_embed(sys: LinearSystem) -> LinearSystem:
    """``[[0, M], [M^dagger, 0]] y = [b; 0]``; the solution is ``y = [0; x]``."""
    m = sys.size
    big = np.zeros((2 * m, 2 * m), dtype=complex)
    big[:m, m:] = sys.matrix
    big[m:, :m] = sys.matrix.conj().T
    rhs = np.concatenate([sys.rhs, np.zeros(m, dtype=complex)])
    prov = tuple(sys.provenance) + tuple(("embedding-adjoint", i) for i in range(m))
    return LinearSystem(big, rhs, hermitian=True, provenance=prov)


def extract_embedded(y: np.ndarray, m: int, atol: float = 1e-10) -> np.ndarray:
    """Lower block of an embedded solution; warns when the upper block is not ~0."""
    y = np.asarray(y)
    if y.size != 2 * m:
        raise LinearSystemError(f"embedded solution should have {2 * m} entries, got {y.size}")
    upper = np.max(np.abs(y[:m]), initial=0.0)
    if upper > atol * max(1.0, np.max(np.abs(y[m:]), initial=0.0)):
        log.warning("embedded solution upper block is %.3e, expected 0", upper)
    return y[m:].copy()


def pad_to_power_of_two(sys: LinearSystem, min_size: int = 1) -> LinearSystem:
    """Embed ``M`` in the top-left of a ``2^q`` matrix with identity on the rest."""
    m = sys.size
    target = max(int(min_size), 1)
    while target < m:
        target *= 2
    if target == m:
        return sys
    big = np.eye(target, dtype=complex)
    big[:m, :m] = sys.matrix
    rhs = np.zeros(target, dtype=complex)
    rhs[:m] = sys.rhs
    prov = tuple(sys.provenance) + tuple(("padding", i) for i in range(m, target))
    return LinearSystem(big, rhs, hermitian=sys.hermitian, provenance=prov)


@dataclass(frozen=True)
class SpectralScaling:
    scale: float
    original_extent: float

    def unscale(self, x_scaled: np.ndarray) -> np.ndarray:
        """Solution of ``M x = b`` from the solution of ``(s M) x_s = b``."""
        return self.scale * np.asarray(x_scaled)


def scale_spectrum(sys: LinearSystem) -> tuple[LinearSystem, SpectralScaling]:
    """Rescale by a power of two so every eigenvalue satisfies ``|lambda| <= 0.5``.

    A power of two keeps the scaled matrix bit-exact. Spectra already inside
    the band are left alone (``s = 1``).
    """
    if not sys.hermitian:
        raise LinearSystemError("scale_spectrum needs a Hermitian system")
    extent = float(np.max(np.abs(np.linalg.eigvalsh(sys.matrix))))
    if extent == 0.0:
        raise LinearSystemError("cannot scale the spectrum of a zero matrix")
    if extent <= SPECTRAL_BAND:
        s = 1.0
    else:
        s = 2.0 ** -math.ceil(math.log2(extent / SPECTRAL_BAND))
    scaled = replace(sys, matrix=s * sys.matrix)
    return scaled, SpectralScaling(scale=s, original_extent=extent)


def condition_number(matrix: np.ndarray) -> float:
    sv = np.linalg.svd(np.asarray(matrix), compute_uv=False)
    if sv.size == 0:
        return 1.0
    if sv[-1] == 0.0:
        return math.inf
    return float(sv[0] / sv[-1])


class DirectSolution(NamedTuple):
    x: np.ndarray
    condition: float


def classical_solve(sys: LinearSystem) -> DirectSolution:
    """Partial-pivoting LU solve; the reference every other solver is checked against.

    Raises
    ------
    SingularMatrixError
        A pivot falls below ``1e-13`` times the largest pivot magnitude; the
        offending pivot index is attached as ``.pivot``.
    """
    a = np.asarray(sys.matrix)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(a, check_finite=True)
    diag = np.abs(np.diag(lu))
    ref = max(np.max(np.abs(a), initial=0.0), np.max(diag, initial=0.0))
    bad = np.flatnonzero(diag <= PIVOT_RTOL * ref) if ref > 0 else np.arange(diag.size)
    if bad.size:
        raise SingularMatrixError(f"matrix is singular: pivot {bad[0]} is {diag[bad[0]]:.3e}", pivot=int(bad[0]))
    x = sla.lu_solve((lu, piv), np.asarray(sys.rhs))
    res = np.linalg.norm(a @ x - sys.rhs)
    bound = 1e-10 * (np.linalg.norm(a, 2) * np.linalg.norm(x) + np.linalg.norm(sys.rhs))
    if res > bound:
        log.warning("classical solve residual %.3e exceeds %.3e", res, bound)
    return DirectSolution(x, condition_number(a))


def least_squares_solve(matrix: np.ndarray, rhs: np.ndarray) -> DirectSolution:
    """Minimum-norm least-squares solution for tall collocation systems."""
    a = np.asarray(matrix)
    x, _, rank, _ = np.linalg.lstsq(a, np.asarray(rhs), rcond=None)
    if rank < a.shape[1]:
        raise SingularMatrixError(f"collocation matrix has rank {rank} < {a.shape[1]} unknowns")
    return DirectSolution(x, condition_number(a))


def normal_equations(matrix: np.ndarray, rhs: np.ndarray) -> LinearSystem:
    """Square Hermitian system ``M^dagger M x = M^dagger b`` for a tall ``M``."""
    a = np.asarray(matrix, dtype=complex)
    b = np.asarray(rhs, dtype=complex)
    ah = a.conj().T
    g = ah @ a
    g = 0.5 * (g + g.conj().T)
    prov = tuple(("normal-equations", i) for i in range(a.shape[1]))
    return LinearSystem(g, ah @ b, hermitian=True, provenance=prov)


def dump_matrix(matrix: np.ndarray, stream=None) -> str | None:
    """Write ``m`` then one line per row of ``re im`` pairs (row-major)."""
    m = np.asarray(matrix, dtype=complex)
    buf = io.StringIO() if stream is None else stream
    buf.write(f"{m.shape[0]}\n")
    for row in m:
        buf.write(" ".join(f"{float(z.real)!r} {float(z.imag)!r}" for z in row) + "\n")
    if stream is None:
        return buf.getvalue()
    return None


def load_matrix(text_or_stream) -> np.ndarray:
    text = text_or_stream if isinstance(text_or_stream, str) else text_or_stream.read()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise LinearSystemError("empty matrix dump")
    m = int(lines[0])
    if len(lines) != m + 1:
        raise LinearSystemError(f"matrix dump declares {m} rows but has {len(lines) - 1}")
    out = np.empty((m, m), dtype=complex)
    for i, ln in enumerate(lines[1:]):
        vals = [float(v) for v in ln.split()]
        if len(vals) != 2 * m:
            raise LinearSystemError(f"row {i} has {len(vals)} numbers, expected {2 * m}")
        out[i] = np.array(vals[0::2]) + 1j * np.array(vals[1::2])
    return out
