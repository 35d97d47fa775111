"""Batch pipeline behind the command line: assemble, solve, verify, report.

Reports are plain ``dict`` objects whose key order is fixed, so serializing
the same run twice gives identical bytes apart from the ``timings`` section.
The layout is documented in ``data/report.schema.json``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
import time
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import QStefanError
from .heatseries import pde_residual
from .hhl import HHLConfig
from .problemfile import parse_problem_file
from .problems import (
    assemble,
    boundary_residuals,
    chebyshev_times,
    flux_value,
    problem_kind,
    unpack_solution,
)
from .solvers import solve_classical, solve_hhl

SCHEMA_VERSION = "1.0"
TOLERANCE_ENV = "QSTEFAN_TOLERANCE"
DEFAULT_TOLERANCE = 1e-8
PROBE_FRACTIONS = (0.2, 0.4, 0.6, 0.8, 1.0)
PDE_SAMPLES = 5

EXIT_OK, EXIT_ERROR, EXIT_VERIFY = 0, 1, 2


def tolerance_from_env(environ=None) -> float:
    env = os.environ if environ is None else environ
    raw = env.get(TOLERANCE_ENV)
    if raw is None or raw.strip() == "":
        return DEFAULT_TOLERANCE
    try:
        tol = float(raw)
    except ValueError:
        raise QStefanError(f"{TOLERANCE_ENV}={raw!r} is not a number") from None
    if not (tol > 0 and math.isfinite(tol)):
        raise QStefanError(f"{TOLERANCE_ENV} must be a positive finite number, got {raw!r}")
    return tol


@dataclass(frozen=True)
class RunConfig:
    problem_file: str
    backend: str = "classical"
    clock_qubits: int | None = None
    truncation: int | None = None
    collocation_count: int | None = None
    probe_times: tuple | None = None
    output_path: str | None = None
    output_format: str = "json"
    hhl_mode: str = "exact"
    shots: int = 8192
    seed: int = 0
    tolerance: float = DEFAULT_TOLERANCE

    def __post_init__(self):
        if self.backend not in ("classical", "hhl", "both"):
            raise QStefanError(f"unknown backend {self.backend!r}")
        if self.backend != "classical" and self.clock_qubits is None:
            raise QStefanError(f"backend={self.backend} requires clock_qubits")
        if self.output_format not in ("json", "csv"):
            raise QStefanError(f"unknown output format {self.output_format!r}")
        if self.probe_times is not None:
            if not self.probe_times or any(not t > 0 for t in self.probe_times):
                raise QStefanError("probe times must be a nonempty list of positive numbers")
            object.__setattr__(self, "probe_times", tuple(float(t) for t in self.probe_times))


@dataclass
class RunOutcome:
    report: dict
    exit_code: int
    warnings: list = field(default_factory=list)


def _num(v):
    """JSON-safe float; non-finite values become ``None``."""
    v = float(v)
    return v if math.isfinite(v) else None


def _apply_overrides(problem, cfg: RunConfig, warnings):
    kind = problem_kind(problem)
    if cfg.truncation is not None:
        problem = replace(problem, truncation=cfg.truncation)
    if cfg.collocation_count is not None:
        if kind == "two_phase":
            problem = replace(problem, collocation_count=cfg.collocation_count)
        else:
            warnings.append(f"--collocation ignored for {kind} problems")
    return problem


def _horizon(problem) -> float:
    return float(getattr(problem, "horizon", 1.0))


def _probe_times(problem, cfg: RunConfig, collocation, warnings):
    h = _horizon(problem)
    times = cfg.probe_times if cfg.probe_times is not None else tuple(h * f for f in PROBE_FRACTIONS)
    for t in times:
        if any(abs(t - c) <= 1e-12 * max(1.0, abs(c)) for c in collocation):
            warnings.append(f"probe time {t!r} coincides with a collocation point")
    return tuple(times)


def _pde_grid(problem, t, phase):
    front = problem.boundary.position(t) if hasattr(problem, "boundary") else problem.boundary_coeff * math.sqrt(t)
    front = abs(front) if front != 0 else 1.0
    if phase == 1:
        return [(front * k / PDE_SAMPLES, t) for k in range(1, PDE_SAMPLES + 1)]
    far = getattr(problem, "far_field_cutoff", None) or 2.0 * front
    return [(front + (far - front) * k / PDE_SAMPLES, t) for k in range(1, PDE_SAMPLES + 1)]


def _pde_max(problem, sol, times) -> float:
    worst = pde_residual(sol.phase1, [pt for t in times for pt in _pde_grid(problem, t, 1)]).max_residual
    if sol.phase2 is not None:
        worst = max(worst, pde_residual(sol.phase2, [pt for t in times for pt in _pde_grid(problem, t, 2)]).max_residual)
    return float(worst)


def run(cfg: RunConfig) -> RunOutcome:
    """Execute one problem file; raises on errors, reports verification failures."""
    t0 = time.perf_counter()
    warnings: list[str] = []
    problem = _apply_overrides(parse_problem_file(cfg.problem_file), cfg, warnings)
    kind = problem_kind(problem)

    asm = assemble(problem)
    warnings.extend(asm.warnings)
    t1 = time.perf_counter()

    classical = hhl = None
    if cfg.backend in ("classical", "both"):
        classical = np.real(solve_classical(asm).x)
    if cfg.backend in ("hhl", "both"):
        hcfg = HHLConfig(mode=cfg.hhl_mode, shots=cfg.shots, seed=cfg.seed)
        hhl = solve_hhl(asm, cfg.clock_qubits, hcfg)
    t2 = time.perf_counter()

    primary = classical if classical is not None else np.real(hhl.x)
    sol = unpack_solution(problem, asm, primary)
    probes = _probe_times(problem, cfg, asm.collocation_times, warnings)
    bres = boundary_residuals(problem, sol, probes)
    pde_max = _pde_max(problem, sol, probes)
    flux = [{"t": _num(t), "P": _num(flux_value(problem, sol, t))} for t in probes] if (
        kind == "model_problem" or sol.flux_taylor is not None
    ) else None
    t3 = time.perf_counter()

    failed = bres.max_residual > cfg.tolerance or pde_max > cfg.tolerance
    coefficients = []
    for i, lab in enumerate(asm.unknown_labels):
        coefficients.append(
            {
                "label": lab,
                "classical": None if classical is None else _num(classical[i]),
                "hhl": None if hhl is None else _num(np.real(hhl.x[i])),
            }
        )
    report = {
        "schema_version": SCHEMA_VERSION,
        "problem_file": Path(cfg.problem_file).name,
        "problem_kind": kind,
        "backend": cfg.backend,
        "status": "verification_failed" if failed else "ok",
        "tolerance": cfg.tolerance,
        "system": {
            "rows": int(asm.shape[0]),
            "cols": int(asm.shape[1]),
            "condition_number": _num(asm.condition_number),
            "unknown_labels": list(asm.unknown_labels),
            "row_provenance": [[c, w] for c, w in asm.row_provenance],
        },
        "coefficients": coefficients,
        "residuals": {
            "pde_max_residual": _num(pde_max),
            "boundary_max_residual": _num(bres.max_residual),
            "boundary_by_condition": {k: _num(v) for k, v in bres.by_label().items()},
            "probes": [
                {"t": _num(t), "condition": lab, "residual": _num(r)}
                for t, lab, r in zip(bres.points, bres.labels, bres.per_point)
            ],
        },
        "hhl": None
        if hhl is None
        else {
            "n_l": hhl.n_l,
            "mode": hhl.hhl.mode,
            "fidelity": _num(hhl.fidelity),
            "success_probability": _num(hhl.success_probability),
            "evolution_time": _num(hhl.hhl.evolution_time),
            "inversion_constant": _num(hhl.hhl.inversion_constant),
            "inversion_leakage": _num(hhl.hhl.inversion_leakage),
            "spectral_scale": _num(hhl.scaling.scale),
            "embedded": hhl.embedded,
            "normal_equations": hhl.normal_equations,
            "padded_size": hhl.padded_size,
        },
        "flux_samples": flux,
        "warnings": list(warnings),
        "timings": {
            "assemble_s": t1 - t0,
            "solve_s": t2 - t1,
            "verify_s": t3 - t2,
            "total_s": time.perf_counter() - t0,
        },
    }
    return RunOutcome(report, EXIT_VERIFY if failed else EXIT_OK, warnings)


def render_json(report: dict) -> str:
    return json.dumps(report, indent=2, allow_nan=False) + "\n"


CSV_HEADER = ("section", "label", "t", "classical", "hhl", "value")


def render_csv(report: dict) -> str:
    """One row per unknown, one per probe residual, plus flux samples."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)

    def cell(v):
        return "" if v is None else repr(v)

    for c in report["coefficients"]:
        w.writerow(("coefficient", c["label"], "", cell(c["classical"]), cell(c["hhl"]), ""))
    for r in report["residuals"]["probes"]:
        w.writerow(("residual", r["condition"], cell(r["t"]), "", "", cell(r["residual"])))
    for f in report["flux_samples"] or ():
        w.writerow(("flux", "P", cell(f["t"]), "", "", cell(f["P"])))
    return buf.getvalue()


def render(report: dict, fmt: str) -> str:
    return render_json(report) if fmt == "json" else render_csv(report)


def strip_timings(report: dict) -> dict:
    return {k: v for k, v in report.items() if k != "timings"}


def write_atomic(path, text: str) -> None:
    """Write via a temporary sibling and rename, so readers never see a partial file."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def load_schema() -> dict:
    return json.loads(resources.files("qstefan").joinpath("data/report.schema.json").read_text(encoding="utf-8"))


def default_output_name(problem_file: str, fmt: str) -> str:
    return Path(problem_file).stem + "." + fmt


def run_many(configs: Sequence[RunConfig], jobs: int = 1):
    """Run independent configs, optionally in separate processes; order is preserved."""
    if jobs <= 1 or len(configs) <= 1:
        return [_guarded(c) for c in configs]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_guarded, configs))


def _guarded(cfg: RunConfig):
    """``(outcome, None)`` or ``(None, error message)``."""
    try:
        return run(cfg), None
    except (QStefanError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        module = getattr(exc, "module", "qstefan")
        return None, f"[{module}] {exc}"
