import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from qae.core import ConvergenceTrace, RepeatRecord, exact_diagonalize
from qae.matrix_io import (
    MatrixParseError,
    MatrixValidationError,
    SymmetricMatrix,
    generate_ci_like_matrix,
    load_matrix,
    read_trace,
    write_matrix,
    write_trace,
)


def _write(tmp_path, text):
    p = tmp_path / "m.txt"
    p.write_text(text)
    return p


def test_load_single_entry(tmp_path):
    H = load_matrix(_write(tmp_path, "1\n-2.5\n"))
    assert H.dim == 1
    assert H.entries.tolist() == [[-2.5]]


def test_load_two_by_two(tmp_path):
    assert load_matrix(_write(tmp_path, "2\n1 2\n2 1\n")).entries.tolist() == [[1, 2], [2, 1]]


def test_scientific_notation(tmp_path):
    assert load_matrix(_write(tmp_path, "2\n1e0 -2.5E-1\n-0.25 3\n"))[0, 1] == -0.25


def test_asymmetric_rejected(tmp_path):
    with pytest.raises(MatrixValidationError, match="symmetric"):
        load_matrix(_write(tmp_path, "2\n1 2\n2.1 1\n"))


def test_tiny_asymmetry_is_averaged(tmp_path):
    H = load_matrix(_write(tmp_path, "2\n1 2\n2.0000000000001 1\n"))
    assert H[0, 1] == H[1, 0]


@pytest.mark.parametrize(
    "text, line",
    [
        ("", 1),
        ("x\n1\n", 1),
        ("2\n1 2\n", 3),
        ("2\n1 2\n3\n", 3),
        ("2\n1 2\n2 abc\n", 3),
        ("2\n1 2 3\n2 1\n", 2),
    ],
)
def test_parse_errors_carry_line_numbers(tmp_path, text, line):
    with pytest.raises(MatrixParseError) as info:
        load_matrix(_write(tmp_path, text))
    assert info.value.line == line


def test_non_finite_rejected(tmp_path):
    with pytest.raises(MatrixValidationError):
        load_matrix(_write(tmp_path, "2\n1 nan\nnan 1\n"))


def test_matrix_is_read_only():
    H = SymmetricMatrix(np.eye(2))
    with pytest.raises(ValueError):
        H.entries[0, 0] = 5.0


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 6)).map(lambda t: (t[0], t[0])),
              elements=st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False, allow_subnormal=False)))
def test_write_load_round_trip_is_exact(tmp_path_factory, A):
    H = np.triu(A) + np.triu(A, 1).T
    path = tmp_path_factory.mktemp("rt") / "m.txt"
    write_matrix(H, path)
    assert np.array_equal(load_matrix(path).entries, H)


def test_generator_zero_coupling_is_diagonal():
    H = generate_ci_like_matrix(2, 1.0, 0.0, seed=3)
    assert H[0, 1] == 0.0
    assert exact_diagonalize(H).ground_energy == pytest.approx(H.entries.diagonal().min(), abs=1e-14)


@pytest.mark.parametrize("seed", [0, 7, 99])
def test_generator_structure(seed):
    H = generate_ci_like_matrix(9, 1.0, 0.2, seed).entries
    d = np.diag(H)
    assert np.all(np.diff(d) >= 1.0)
    off = H[~np.eye(9, dtype=bool)]
    assert np.max(np.abs(off)) <= 0.2


def test_generator_is_deterministic():
    a = generate_ci_like_matrix(9, 1.0, 0.2, 7).entries
    b = generate_ci_like_matrix(9, 1.0, 0.2, 7).entries
    assert a.tobytes() == b.tobytes()


# lowest eigenvalue of generate_ci_like_matrix(9, 1, 0.2, 7), frozen from numpy.linalg.eigvalsh
GROUND_SEED7 = -9.009108653951941


def test_generator_seed7_ground_energy_frozen():
    H = generate_ci_like_matrix(9, 1.0, 0.2, 7)
    assert exact_diagonalize(H).ground_energy == pytest.approx(np.linalg.eigvalsh(H.entries)[0], abs=1e-12)
    assert exact_diagonalize(H).ground_energy == pytest.approx(GROUND_SEED7, abs=1e-9)


@pytest.mark.parametrize("kwargs", [dict(dim=1, gap=1, coupling_scale=0.1), dict(dim=4, gap=1, coupling_scale=0.5)])
def test_generator_rejects_bad_parameters(kwargs):
    with pytest.raises(ValueError):
        generate_ci_like_matrix(seed=0, **kwargs)


def _trace(n):
    t = ConvergenceTrace()
    for r in range(1, n + 1):
        t.append(RepeatRecord(r, -1.0 / r, -0.1 * r - 1 / 3, -0.1 * r - 1 / 3, (r % 3, 1 + r % 3), 0.125))
    return t


@pytest.mark.parametrize("n", [1, 30])
def test_trace_round_trip(tmp_path, n):
    path = tmp_path / "t.trace"
    write_trace(_trace(n), path)
    rows = read_trace(path)
    assert len(rows) == n
    assert [r["repeat_index"] for r in rows] == list(range(1, n + 1))
    for row, rec in zip(rows, _trace(n)):
        assert row["lambda"] == rec.lam
        assert row["best_energy"] == rec.best_energy
        assert row["subspace_indices"] == list(rec.subspace)
        assert list(row) == ["repeat_index", "lambda", "repeat_energy", "best_energy", "subspace_indices", "chain_break_fraction"]


def test_empty_trace_rejected(tmp_path):
    with pytest.raises(ValueError):
        write_trace(ConvergenceTrace(), tmp_path / "t")


def test_unwritable_trace_path(tmp_path):
    with pytest.raises(OSError):
        write_trace(_trace(1), tmp_path / "missing" / "t")
