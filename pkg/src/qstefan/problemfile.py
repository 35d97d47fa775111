"""Flat ``key = value`` problem files.

One problem per file. Blank lines and ``#`` comments are ignored. Values are
numbers, booleans (``true``/``false``), bare words, or arrays of numbers in
square brackets::

    kind = one_phase
    nu = 0.5
    diffusivity = 1.0
    boundary_coeff = 2.0
    flux_unknown = true
    boundary_temp_taylor = [1.0, 0.25]

The free boundary is ``boundary_coeff`` (``alpha sqrt(t)``) or
``boundary_poly`` (polynomial coefficients in ``t``), never both.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path

from .errors import ProblemFileError
from .problems import UNKNOWN, FreeBoundary, ModelProblemD0, OnePhaseISP, TwoPhaseISP

_KEY = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_WORD = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")

REAL, INT, ARRAY, BOOL, WORD = "real", "int", "array", "bool", "word"

_ONE_PHASE = {
    "nu": REAL,
    "diffusivity": REAL,
    "melt_temp": REAL,
    "robin_beta": REAL,
    "robin_gamma": REAL,
    "latent_heat": REAL,
    "density": REAL,
    "conductivity": REAL,
    "boundary_coeff": REAL,
    "flux_taylor": ARRAY,
    "flux_unknown": BOOL,
    "truncation": INT,
    "boundary_temp_taylor": ARRAY,
    "stefan_source_taylor": ARRAY,
    "strict_domain": BOOL,
}
_MODEL = {
    "nu": REAL,
    "diffusivity": REAL,
    "boundary_coeff": REAL,
    "boundary_poly": ARRAY,
    "f_taylor": ARRAY,
    "conductivity": REAL,
    "latent_heat": REAL,
    "density": REAL,
    "truncation": INT,
    "horizon": REAL,
}
_TWO_PHASE = {
    "nu": REAL,
    "a1": REAL,
    "a2": REAL,
    "melt_temp": REAL,
    "robin_beta": REAL,
    "robin_gamma": REAL,
    "latent_heat": REAL,
    "density": REAL,
    "conductivity1": REAL,
    "conductivity2": REAL,
    "initial_profile_taylor": ARRAY,
    "boundary_coeff": REAL,
    "boundary_poly": ARRAY,
    "far_field_cutoff": REAL,
    "collocation_count": INT,
    "horizon": REAL,
    "truncation": INT,
    "flux_terms": INT,
    "iso1_taylor": ARRAY,
    "iso2_taylor": ARRAY,
    "stefan_source_taylor": ARRAY,
    "strict_domain": BOOL,
}

SCHEMAS = {"one_phase": _ONE_PHASE, "model_problem": _MODEL, "two_phase": _TWO_PHASE}

_REQUIRED = {
    "one_phase": (
        "nu", "diffusivity", "melt_temp", "robin_beta", "robin_gamma",
        "latent_heat", "density", "conductivity", "boundary_coeff", "truncation",
    ),
    "model_problem": ("nu", "diffusivity", "f_taylor", "conductivity", "latent_heat", "density", "truncation"),
    "two_phase": (
        "nu", "a1", "a2", "melt_temp", "robin_beta", "robin_gamma", "latent_heat", "density",
        "conductivity1", "conductivity2", "initial_profile_taylor", "collocation_count", "truncation",
    ),
}


@dataclass(frozen=True)
class Entry:
    value: object
    line: int
    column: int


def _number(text: str, path, line, col) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ProblemFileError(f"expected a number, got {text!r}", path, line, col) from None
    if not math.isfinite(v):
        raise ProblemFileError(f"non-finite number {text!r}", path, line, col)
    return v


def _parse_value(text: str, path, line, col):
    if text.startswith("["):
        if not text.endswith("]"):
            raise ProblemFileError("unterminated array (missing ']')", path, line, col + len(text))
        body = text[1:-1]
        if not body.strip():
            return []
        out, offset = [], col + 1
        for part in body.split(","):
            stripped = part.strip()
            item_col = offset + (len(part) - len(part.lstrip()))
            if not stripped:
                raise ProblemFileError("empty array element", path, line, item_col)
            out.append(_number(stripped, path, line, item_col))
            offset += len(part) + 1
        return out
    if text in ("true", "false"):
        return text == "true"
    if _WORD.fullmatch(text):
        return text
    return _number(text, path, line, col)


def read_entries(text: str, path: str = "<string>") -> dict[str, Entry]:
    """Tokenize a problem file into ``key -> Entry`` (duplicate keys rejected)."""
    entries: dict[str, Entry] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        if "=" not in line:
            col = len(line) - len(line.lstrip()) + 1
            raise ProblemFileError("expected 'key = value'", path, lineno, col)
        lhs, rhs = line.split("=", 1)
        key = lhs.strip()
        key_col = len(lhs) - len(lhs.lstrip()) + 1
        if not _KEY.fullmatch(key):
            raise ProblemFileError(f"invalid key {key!r}", path, lineno, key_col)
        if key in entries:
            raise ProblemFileError(f"duplicate key {key!r} (first set on line {entries[key].line})", path, lineno, key_col)
        value_text = rhs.strip()
        value_col = len(lhs) + 2 + (len(rhs) - len(rhs.lstrip()))
        if not value_text:
            raise ProblemFileError(f"missing value for {key!r}", path, lineno, value_col)
        entries[key] = Entry(_parse_value(value_text, path, lineno, value_col), lineno, value_col)
    return entries


def _typed(key, kind, entry: Entry, path):
    v = entry.value
    ok = {
        REAL: isinstance(v, float),
        INT: isinstance(v, float) and v.is_integer(),
        ARRAY: isinstance(v, list),
        BOOL: isinstance(v, bool),
        WORD: isinstance(v, str),
    }[kind]
    if not ok:
        raise ProblemFileError(f"{key} must be {'an' if kind in (INT, ARRAY) else 'a'} {kind}", path, entry.line, entry.column)
    return int(v) if kind == INT else tuple(v) if kind == ARRAY else v


def _blame(message: str, entries: dict[str, Entry]):
    """Line and column of the first key named in a validation message."""
    for key, e in sorted(entries.items(), key=lambda kv: kv[1].line):
        if re.search(rf"\b{re.escape(key)}\b", message):
            return e.line, e.column
    return None, None


def _boundary(values, entries, path):
    if "boundary_coeff" in values and "boundary_poly" in values:
        e = entries["boundary_poly"]
        raise ProblemFileError("boundary_coeff and boundary_poly are mutually exclusive", path, e.line, e.column)
    if "boundary_coeff" in values:
        return FreeBoundary.sqrt(values.pop("boundary_coeff"))
    if "boundary_poly" in values:
        return FreeBoundary.poly(values.pop("boundary_poly"))
    raise ProblemFileError("missing required key 'boundary_coeff' (or 'boundary_poly')", path, None, None)


def parse_problem(text: str, path: str = "<string>"):
    """Parse and validate a problem; every failure is a :class:`ProblemFileError`."""
    entries = read_entries(text, path)
    if "kind" not in entries:
        raise ProblemFileError("missing required key 'kind'", path, None, None)
    kind_entry = entries["kind"]
    kind = kind_entry.value
    if kind not in SCHEMAS:
        raise ProblemFileError(
            f"unknown kind {kind!r}; expected one of {', '.join(sorted(SCHEMAS))}", path, kind_entry.line, kind_entry.column
        )
    schema = SCHEMAS[kind]
    values = {}
    for key, entry in entries.items():
        if key == "kind":
            continue
        if key not in schema:
            raise ProblemFileError(f"unknown field {key!r} for kind {kind}", path, entry.line, 1)
        values[key] = _typed(key, schema[key], entry, path)
    for key in _REQUIRED[kind]:
        if key not in values:
            raise ProblemFileError(f"missing required key {key!r}", path, None, None)

    try:
        if kind == "one_phase":
            has_flux = "flux_taylor" in values
            unknown = values.pop("flux_unknown", False)
            if has_flux and unknown:
                e = entries["flux_unknown"]
                raise ProblemFileError("flux_taylor and flux_unknown = true are mutually exclusive", path, e.line, e.column)
            if not has_flux and not unknown:
                raise ProblemFileError("set either flux_taylor or flux_unknown = true", path, None, None)
            if unknown:
                values["flux_taylor"] = UNKNOWN
            return OnePhaseISP(**values)
        boundary = _boundary(values, entries, path)
        if kind == "model_problem":
            return ModelProblemD0(boundary=boundary, **values)
        return TwoPhaseISP(boundary=boundary, **values)
    except ProblemFileError:
        raise
    except ValueError as exc:
        line, col = _blame(str(exc), entries)
        raise ProblemFileError(f"invalid {kind} problem: {exc}", path, line, col) from exc


def parse_problem_file(path) -> object:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ProblemFileError(f"cannot read problem file: {exc.strerror}", str(p), None, None) from exc
    return parse_problem(text, str(p))
