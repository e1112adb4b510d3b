"""Hamiltonian matrices, trace files and synthetic CI-like test matrices."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

SYMMETRY_TOL = 1e-12


class MatrixParseError(ValueError):
    """Malformed matrix file; carries the offending 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class MatrixValidationError(ValueError):
    pass


@dataclass(frozen=True)
class SymmetricMatrix:
    """Dense real symmetric matrix (Hartree) in the CSF basis."""

    entries: np.ndarray

    def __post_init__(self):
        H = np.array(self.entries, dtype=float)
        if H.ndim != 2 or H.shape[0] != H.shape[1] or H.shape[0] < 1:
            raise MatrixValidationError(f"expected a non-empty square matrix, got shape {H.shape}")
        if not np.all(np.isfinite(H)):
            raise MatrixValidationError("matrix has non-finite entries")
        asym = float(np.max(np.abs(H - H.T)))
        if asym > SYMMETRY_TOL:
            raise MatrixValidationError(f"matrix is not symmetric (max asymmetry {asym:.3g})")
        H = 0.5 * (H + H.T)
        H.setflags(write=False)
        object.__setattr__(self, "entries", H)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def __getitem__(self, idx):
        return self.entries[idx]


def load_matrix(path) -> SymmetricMatrix:
    """Read a dense matrix file: the dimension on line 1, then one row per line."""
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise MatrixParseError("empty file", 1)
    try:
        dim = int(lines[0].strip())
    except ValueError:
        raise MatrixParseError(f"expected the matrix dimension, got {lines[0]!r}", 1) from None
    if dim < 1:
        raise MatrixParseError(f"dimension must be positive, got {dim}", 1)
    if len(lines) - 1 != dim:
        raise MatrixParseError(f"expected {dim} rows, found {len(lines) - 1}", min(len(lines), dim + 1) + 1)
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        tokens = line.split()
        if len(tokens) != dim:
            raise MatrixParseError(f"expected {dim} values, found {len(tokens)}", lineno)
        try:
            rows.append([float(t) for t in tokens])
        except ValueError as exc:
            raise MatrixParseError(str(exc), lineno) from None
    return SymmetricMatrix(np.array(rows))


def write_matrix(H, path) -> None:
    H = np.asarray(H, dtype=float)
    lines = [str(H.shape[0])]
    lines += [" ".join(repr(float(v)) for v in row) for row in H]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def generate_ci_like_matrix(dim: int, gap: float, coupling_scale: float, seed: int) -> SymmetricMatrix:
    """Synthetic CI-like matrix with a dominant reference configuration.

    Diagonal energies start at ``-gap * dim`` and climb in steps of at least
    ``gap``; off-diagonal couplings are drawn uniformly in
    ``[-coupling_scale, coupling_scale]`` and damped by ``1 / |a - b|``
    so that couplings between distant configurations decay.

    Raises:
        ValueError: if ``dim < 2`` or ``coupling_scale >= gap / 2``.
    """
    if dim < 2:
        raise ValueError(f"dim must be >= 2, got {dim}")
    if gap <= 0 or coupling_scale < 0:
        raise ValueError("gap must be positive and coupling_scale non-negative")
    if coupling_scale >= gap / 2:
        raise ValueError(f"coupling_scale {coupling_scale} must be < gap/2 = {gap / 2}")
    rng = np.random.default_rng(seed)
    steps = gap * (1.0 + rng.random(dim - 1))
    diag = -gap * dim + np.concatenate([[0.0], np.cumsum(steps)])
    H = np.diag(diag)
    iu = np.triu_indices(dim, 1)
    decay = 1.0 / np.abs(iu[0] - iu[1])
    H[iu] = coupling_scale * rng.uniform(-1.0, 1.0, size=iu[0].shape[0]) * decay
    H = np.triu(H) + np.triu(H, 1).T
    return SymmetricMatrix(H)


TRACE_KEYS = ("repeat_index", "lambda", "repeat_energy", "best_energy", "subspace_indices", "chain_break_fraction")


def write_trace(trace, path) -> None:
    """Write one ``key=value`` line per Repeat.

    Floats use ``repr`` so reading the file back gives the same doubles.
    """
    records = list(trace)
    if not records:
        raise ValueError("trace is empty")
    out = []
    for rec in records:
        row = rec.as_dict() if hasattr(rec, "as_dict") else dict(rec)
        parts = []
        for key in TRACE_KEYS:
            value = row[key]
            if key == "subspace_indices":
                parts.append(f"{key}={','.join(str(int(v)) for v in value)}")
            elif key == "repeat_index":
                parts.append(f"{key}={int(value)}")
            else:
                parts.append(f"{key}={float(value)!r}")
        out.append(" ".join(parts))
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


def read_trace(path) -> list[dict]:
    records = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        row = {}
        for part in line.split():
            key, _, value = part.partition("=")
            if key == "subspace_indices":
                row[key] = [int(v) for v in value.split(",") if v]
            elif key == "repeat_index":
                row[key] = int(value)
            else:
                row[key] = float(value)
        if tuple(row) != TRACE_KEYS:
            raise MatrixParseError(f"unexpected trace keys {tuple(row)}", lineno)
        records.append(row)
    return records


def write_result(result, path) -> None:
    """Persist a :class:`~qae.core.ResultRecord` as JSON."""
    payload = {
        "final_energy": result.final_energy,
        "final_coefficients": [float(v) for v in result.final_coefficients],
        "repeats_run": len(result.trace),
        "trace": [rec.as_dict() for rec in result.trace],
        "config": result.config_echo.as_dict(),
    }
    Path(path).write_text(json.dumps(payload, indent=2, allow_nan=False, default=_jsonable) + "\n", encoding="utf-8")


def _jsonable(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    raise TypeError(f"cannot serialize {type(value).__name__}")
