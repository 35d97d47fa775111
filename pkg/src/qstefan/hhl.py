"""Exact statevector simulation of the HHL linear-systems algorithm.

Register order (most significant first): one ancilla qubit, an ``n_l``-qubit
clock, an ``n_b``-qubit solution register. The flat amplitude index is

    ancilla * 2**(n_l + n_b) + clock * 2**n_b + system

and the clock is read as an ``n_l``-bit two's-complement integer ``j`` so the
estimated eigenvalue is ``2 pi j / (2**n_l t)`` with its sign.

The time evolution ``U = exp(i M t)`` is applied through an exact
eigendecomposition of ``M``; no gate synthesis or Trotterization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Literal

import numpy as np
import scipy.linalg as sla

from .errors import HHLError
from .linsys import LinearSystem, classical_solve, is_hermitian

MAX_QUBITS = 24
NORM_ATOL = 1e-10


@dataclass(frozen=True)
class RegisterLayout:
    n_b: int
    n_l: int

    def __post_init__(self):
        if self.n_b < 1 or self.n_l < 1:
            raise HHLError(f"need n_b >= 1 and n_l >= 1, got n_b={self.n_b}, n_l={self.n_l}")
        if self.total_qubits > MAX_QUBITS:
            raise HHLError(f"{self.total_qubits} qubits exceeds the {MAX_QUBITS}-qubit cap")

    @property
    def total_qubits(self) -> int:
        return self.n_b + self.n_l + 1

    @property
    def clock_dim(self) -> int:
        return 1 << self.n_l

    @property
    def system_dim(self) -> int:
        return 1 << self.n_b

    @property
    def shape(self) -> tuple[int, int, int]:
        return (2, self.clock_dim, self.system_dim)

    @classmethod
    def for_system(cls, dim: int, n_l: int) -> "RegisterLayout":
        n_b = max(1, int(dim - 1).bit_length())
        if 1 << n_b != dim:
            raise HHLError(f"system dimension {dim} is not a power of two >= 2; pad it first")
        return cls(n_b, n_l)


@dataclass(frozen=True)
class HHLConfig:
    """Algorithm parameters; ``None`` entries are filled by :func:`resolve_config`."""

    evolution_time: float | None = None
    inversion_constant: float | None = None
    mode: Literal["exact", "sampled"] = "exact"
    shots: int = 8192
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("exact", "sampled"):
            raise HHLError(f"unknown HHL mode {self.mode!r}")
        if self.evolution_time is not None and not self.evolution_time > 0:
            raise HHLError("evolution_time must be > 0")
        if self.inversion_constant is not None and not self.inversion_constant > 0:
            raise HHLError("inversion_constant must be > 0")
        if self.shots < 1:
            raise HHLError("shots must be >= 1")


@dataclass(eq=False)
class StateVector:
    amplitudes: np.ndarray
    layout: RegisterLayout

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != 1 << self.layout.total_qubits:
            raise HHLError(f"{amps.size} amplitudes do not fit layout {self.layout}")
        self.amplitudes = amps
        nrm = np.linalg.norm(amps)
        if abs(nrm - 1.0) > NORM_ATOL:
            raise HHLError(f"state norm {nrm!r} deviates from 1")

    @classmethod
    def from_tensor(cls, psi: np.ndarray, layout: RegisterLayout) -> "StateVector":
        return cls(psi.reshape(-1), layout)

    def tensor(self) -> np.ndarray:
        """View with axes ``(ancilla, clock, system)``."""
        return self.amplitudes.reshape(self.layout.shape)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def clock_distribution(self) -> np.ndarray:
        return np.sum(np.abs(self.tensor()) ** 2, axis=(0, 2))

    def dump(self, stream, threshold: float = 1e-12) -> None:
        """One ``index real imag`` line per amplitude with modulus above ``threshold``."""
        for i in np.flatnonzero(np.abs(self.amplitudes) > threshold):
            z = self.amplitudes[i]
            stream.write(f"{int(i)} {float(z.real)!r} {float(z.imag)!r}\n")


def signed_clock_values(n_l: int) -> np.ndarray:
    n = 1 << n_l
    c = np.arange(n)
    return np.where(c < n // 2, c, c - n)


def clock_eigenvalues(n_l: int, evolution_time: float) -> np.ndarray:
    """Eigenvalue estimate attached to each clock basis state."""
    return 2.0 * np.pi * signed_clock_values(n_l) / ((1 << n_l) * evolution_time)


def default_evolution_time(n_l: int, spectral_bound: float) -> float:
    """Maps ``+-spectral_bound`` onto the outermost nonzero clock values ``+-(2**(n_l-1) - 1)``."""
    top = (1 << (n_l - 1)) - 1
    if top < 1:
        raise HHLError("the default evolution time needs at least 2 clock qubits")
    if not spectral_bound > 0:
        raise HHLError("spectral bound must be > 0")
    return 2.0 * np.pi * top / ((1 << n_l) * spectral_bound)


def default_inversion_constant(n_l: int, evolution_time: float) -> float:
    """Smallest nonzero representable ``|lambda~|``: the largest safe ``C``."""
    return 2.0 * np.pi / ((1 << n_l) * evolution_time)


def resolve_config(cfg: HHLConfig, sys: LinearSystem, n_l: int) -> HHLConfig:
    t = cfg.evolution_time
    if t is None:
        bound = float(np.max(np.abs(np.linalg.eigvalsh(sys.matrix))))
        t = default_evolution_time(n_l, bound)
    c = cfg.inversion_constant
    if c is None:
        c = default_inversion_constant(n_l, t)
    return replace(cfg, evolution_time=t, inversion_constant=c)


def _require_time(cfg: HHLConfig) -> float:
    if cfg.evolution_time is None:
        raise HHLError("evolution_time is unresolved; call resolve_config first")
    return cfg.evolution_time


def _eigh_checked(sys: LinearSystem, t: float):
    m = np.asarray(sys.matrix)
    if not is_hermitian(m):
        raise HHLError("QPE needs a Hermitian matrix; embed the system first")
    w, v = np.linalg.eigh(m)
    phases = w * t / (2.0 * np.pi)
    if np.any(phases >= 0.5) or np.any(phases < -0.5):
        raise HHLError(
            f"eigenphases {phases.min():.4f}..{phases.max():.4f} fall outside [-1/2, 1/2); "
            "scale the spectrum or shorten the evolution time"
        )
    return w, v


def prepare_state(b, layout: RegisterLayout) -> StateVector:
    """Load ``b / |b|`` into the solution register with clock and ancilla at zero."""
    b = np.asarray(b, dtype=complex).reshape(-1)
    if b.size != layout.system_dim:
        raise HHLError(f"|b> has {b.size} entries, register holds {layout.system_dim}")
    nrm = np.linalg.norm(b)
    if nrm == 0.0:
        raise HHLError("cannot load the zero vector")
    psi = np.zeros(layout.shape, dtype=complex)
    psi[0, 0, :] = b / nrm
    return StateVector.from_tensor(psi, layout)


def _hadamard(n_l: int) -> np.ndarray:
    return sla.hadamard(1 << n_l).astype(float) / math.sqrt(1 << n_l)


def _iqft(n_l: int) -> np.ndarray:
    n = 1 << n_l
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n) / math.sqrt(n)


def _apply_clock(op: np.ndarray, psi: np.ndarray) -> np.ndarray:
    return np.einsum("jk,akd->ajd", op, psi)


def _controlled_powers(psi, w, v, t, sign):
    n = psi.shape[1]
    beta = psi @ v.conj()
    beta = beta * np.exp(sign * 1j * t * np.outer(np.arange(n), w))[None, :, :]
    return beta @ v.T


def qpe(state: StateVector, sys: LinearSystem, cfg: HHLConfig) -> StateVector:
    """Hadamards on the clock, controlled ``U^c`` for clock value ``c``, inverse QFT."""
    t = _require_time(cfg)
    w, v = _eigh_checked(sys, t)
    lay = state.layout
    if sys.size != lay.system_dim:
        raise HHLError(f"matrix is {sys.size}x{sys.size}, register holds {lay.system_dim}")
    psi = _apply_clock(_hadamard(lay.n_l), state.tensor())
    psi = _controlled_powers(psi, w, v, t, +1)
    psi = _apply_clock(_iqft(lay.n_l), psi)
    return StateVector.from_tensor(psi, lay)


def inverse_qpe(state: StateVector, sys: LinearSystem, cfg: HHLConfig) -> StateVector:
    t = _require_time(cfg)
    w, v = _eigh_checked(sys, t)
    lay = state.layout
    psi = _apply_clock(_iqft(lay.n_l).conj().T, state.tensor())
    psi = _controlled_powers(psi, w, v, t, -1)
    psi = _apply_clock(_hadamard(lay.n_l), psi)
    return StateVector.from_tensor(psi, lay)


def eigenvalue_inversion(state: StateVector, cfg: HHLConfig) -> StateVector:
    """Rotate the ancilla by ``C / lambda~`` conditioned on each clock value.

    The zero clock value has no inverse; its branch is left untouched.
    """
    t = _require_time(cfg)
    lay = state.layout
    lam = clock_eigenvalues(lay.n_l, t)
    c = cfg.inversion_constant
    if c is None:
        c = default_inversion_constant(lay.n_l, t)
    ratio = np.zeros_like(lam)
    nz = lam != 0.0
    ratio[nz] = c / lam[nz]
    worst = float(np.max(np.abs(ratio)))
    if worst > 1.0 + 1e-12:
        raise HHLError(f"inversion constant C={c} too large: |C/lambda~| reaches {worst:.6f}")
    ratio = np.clip(ratio, -1.0, 1.0)
    cos = np.sqrt(1.0 - ratio**2)
    psi = state.tensor()
    a0 = psi[0]
    a1 = psi[1]
    out = np.empty_like(psi)
    out[0] = cos[:, None] * a0 - ratio[:, None] * a1
    out[1] = ratio[:, None] * a0 + cos[:, None] * a1
    return StateVector.from_tensor(out, lay)


@dataclass(frozen=True)
class PostSelection:
    solution: np.ndarray
    amplitude: np.ndarray
    success_probability: float
    ancilla_probability: float
    clock_residual: float


def uncompute_and_postselect(state: StateVector, sys: LinearSystem, cfg: HHLConfig) -> PostSelection:
    """Run inverse QPE, then condition on ancilla = 1 and clock = 0.

    ``amplitude`` is the unnormalized conditional branch, ``C * sum_j b_j / lambda~_j |u_j>``
    for a normalized ``b``. ``clock_residual`` is the share of the ancilla-1
    probability left outside the zero clock state; it vanishes when every
    eigenphase is an exact ``n_l``-bit fraction.
    """
    psi = inverse_qpe(state, sys, cfg).tensor()
    anc = float(np.sum(np.abs(psi[1]) ** 2))
    branch = psi[1, 0, :].copy()
    p = float(np.vdot(branch, branch).real)
    if p <= 0.0:
        raise HHLError("post-selection succeeds with probability zero")
    return PostSelection(
        solution=branch / math.sqrt(p),
        amplitude=branch,
        success_probability=p,
        ancilla_probability=anc,
        clock_residual=max(0.0, 1.0 - p / anc) if anc > 0 else 0.0,
    )


def fidelity(u, v) -> float:
    """``|<u|v>|^2`` of the normalized vectors."""
    u = np.asarray(u, dtype=complex).reshape(-1)
    v = np.asarray(v, dtype=complex).reshape(-1)
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise HHLError("fidelity is undefined for a zero vector")
    return min(1.0, float(abs(np.vdot(u / nu, v / nv)) ** 2))


def observable_expectation(x, sys: LinearSystem) -> float:
    """``<x|M|x>`` for Hermitian ``M``."""
    m = np.asarray(sys.matrix)
    if not is_hermitian(m):
        raise HHLError("observable must be Hermitian")
    x = np.asarray(x, dtype=complex).reshape(-1)
    val = np.vdot(x, m @ x)
    if abs(val.imag) > 1e-10 * max(1.0, abs(val.real)):
        raise HHLError(f"<x|M|x> has imaginary part {val.imag:.3e}")
    return float(val.real)


@dataclass(frozen=True)
class HHLResult:
    solution: np.ndarray
    success_probability: float
    fidelity_vs_classical: float
    observable_value: float | None
    estimate: np.ndarray
    clock_residual: float
    inversion_leakage: float
    evolution_time: float
    inversion_constant: float
    layout: RegisterLayout
    mode: str = "exact"
    shots: int | None = None
    successes: int | None = None


def _sample(final: StateVector, rng: np.random.Generator, shots: int):
    """Repeat-until-success sampling of the full register."""
    probs = np.abs(final.amplitudes) ** 2
    probs = probs / probs.sum()
    counts = rng.multinomial(shots, probs).reshape(final.layout.shape)
    hits = counts[1, 0, :]
    return int(hits.sum()), hits


def hhl_solve(sys: LinearSystem, layout: RegisterLayout, cfg: HHLConfig | None = None) -> HHLResult:
    """End-to-end HHL on a Hermitian, power-of-two, band-limited system.

    In ``exact`` mode the post-selected state is computed directly. In
    ``sampled`` mode ``shots`` measurements of the final register are drawn;
    successful shots (ancilla 1, clock 0) give a histogram over the solution
    register whose square root is the estimate, so only magnitudes survive.
    """
    cfg = resolve_config(cfg or HHLConfig(), sys, layout.n_l)
    if sys.size != layout.system_dim:
        raise HHLError(f"matrix is {sys.size}x{sys.size}, register holds {layout.system_dim}")
    state = prepare_state(sys.rhs, layout)
    after_qpe = qpe(state, sys, cfg)
    leakage = float(np.sum(np.abs(after_qpe.tensor()[:, 0, :]) ** 2))
    rotated = eigenvalue_inversion(after_qpe, cfg)
    post = uncompute_and_postselect(rotated, sys, cfg)

    reference = classical_solve(sys).x
    bnorm = float(np.linalg.norm(sys.rhs))
    estimate = post.amplitude * bnorm / cfg.inversion_constant
    solution = post.solution
    success = post.success_probability
    shots = successes = None
    if cfg.mode == "sampled":
        final = inverse_qpe(rotated, sys, cfg)
        rng = np.random.default_rng(cfg.seed)
        successes, hits = _sample(final, rng, cfg.shots)
        if successes == 0:
            raise HHLError(f"no successful post-selection in {cfg.shots} shots")
        shots = cfg.shots
        success = successes / shots
        solution = np.sqrt(hits / successes).astype(complex)
        estimate = solution * math.sqrt(success) * bnorm / cfg.inversion_constant
        fid = fidelity(solution, np.abs(reference))
    else:
        fid = fidelity(solution, reference)
    return HHLResult(
        solution=solution,
        success_probability=success,
        fidelity_vs_classical=fid,
        observable_value=observable_expectation(solution, sys),
        estimate=estimate,
        clock_residual=post.clock_residual,
        inversion_leakage=leakage,
        evolution_time=cfg.evolution_time,
        inversion_constant=cfg.inversion_constant,
        layout=layout,
        mode=cfg.mode,
        shots=shots,
        successes=successes,
    )
