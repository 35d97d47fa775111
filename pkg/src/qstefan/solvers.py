"""Solve an assembled system classically or through the simulated HHL pipeline.

The HHL path prepares the system the way the algorithm needs it:

1. tall collocation systems are replaced by their normal equations;
2. non-Hermitian matrices are embedded as ``[[0, M], [M^dagger, 0]]``;
3. the matrix is padded to a power of two (at least 2x2);
4. the spectrum is scaled by a power of two into ``|lambda| <= 0.5``.

Each step is undone on the way back, so the returned vector estimates the
solution of the original system and can be compared with the classical one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hhl import HHLConfig, HHLResult, RegisterLayout, fidelity, hhl_solve
from .linsys import (
    DirectSolution,
    LinearSystem,
    SpectralScaling,
    classical_solve,
    hermitian_embed,
    is_hermitian,
    least_squares_solve,
    normal_equations,
    pad_to_power_of_two,
    scale_spectrum,
)


def _parts(system):
    if isinstance(system, LinearSystem):
        return np.asarray(system.matrix), np.asarray(system.rhs)
    return np.asarray(system.matrix), np.asarray(system.rhs)


def solve_classical(system) -> DirectSolution:
    """LU for square systems, least squares for tall ones.

    ``system`` may be a :class:`LinearSystem` or anything with ``matrix`` and
    ``rhs`` attributes (an assembled problem).
    """
    m, b = _parts(system)
    if m.shape[0] == m.shape[1]:
        sys = system if isinstance(system, LinearSystem) else LinearSystem(m, b, provenance=system.row_provenance)
        return classical_solve(sys)
    return least_squares_solve(m, b)


@dataclass(frozen=True, eq=False)
class PipelineResult:
    """HHL estimate of the original system plus the bookkeeping that produced it."""

    x: np.ndarray
    fidelity: float
    success_probability: float
    hhl: HHLResult
    scaling: SpectralScaling
    embedded: bool
    normal_equations: bool
    padded_size: int
    reference: np.ndarray

    @property
    def n_l(self) -> int:
        return self.hhl.layout.n_l


def solve_hhl(system, clock_qubits: int, cfg: HHLConfig | None = None) -> PipelineResult:
    m, b = _parts(system)
    reference = solve_classical(system).x
    used_normal = m.shape[0] != m.shape[1]
    sys = normal_equations(m, b) if used_normal else LinearSystem(m, b)
    embedded = not is_hermitian(sys.matrix)
    if embedded:
        sys = hermitian_embed(sys)
    else:
        sys = LinearSystem(sys.matrix, sys.rhs, hermitian=True, provenance=sys.provenance)
    size = sys.size
    padded = pad_to_power_of_two(sys, min_size=2)
    scaled, scaling = scale_spectrum(padded)
    res = hhl_solve(scaled, RegisterLayout.for_system(scaled.size, clock_qubits), cfg)
    est = scaling.unscale(res.estimate)[:size]
    if embedded:
        # HHL only approximates the zero upper block; keep the lower one.
        est = est[size // 2 :]
    target = np.abs(reference) if res.mode == "sampled" else reference
    return PipelineResult(
        x=est,
        fidelity=fidelity(est, target),
        success_probability=res.success_probability,
        hhl=res,
        scaling=scaling,
        embedded=embedded,
        normal_equations=used_normal,
        padded_size=scaled.size,
        reference=reference,
    )
