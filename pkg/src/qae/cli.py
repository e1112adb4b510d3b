"""``qae`` command-line entry point.

Exit status is 0 on success, 1 for bad input (arguments, files, config) and
2 when a computation fails.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from qae.config import ConfigError, RunConfig, load_config
from qae.core import (
    NumericalError,
    exact_diagonalize,
    fine_structure_splitting,
    rayleigh_quotient,
    run_qae,
)
from qae.embedding import EmbeddingError, TopologyError
from qae.matrix_io import (
    MatrixParseError,
    MatrixValidationError,
    generate_ci_like_matrix,
    load_matrix,
    write_matrix,
    write_result,
    write_trace,
)
from qae.samplers import SamplerError

EXIT_OK, EXIT_INPUT, EXIT_RUNTIME = 0, 1, 2

_INPUT_ERRORS = (ConfigError, MatrixParseError, MatrixValidationError, TopologyError, FileNotFoundError, IsADirectoryError)
_RUNTIME_ERRORS = (NumericalError, EmbeddingError, SamplerError, ArithmeticError, OSError)


class _InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def fmt(x: float) -> str:
    return f"{x:.9f}"


def percent_error(reference: float, value: float) -> float:
    """``(reference - value) / reference * 100``."""
    if reference == 0.0:
        raise NumericalError("percent error is undefined for a zero reference energy")
    return (reference - value) / reference * 100.0


def lambda_scan(H, lambdas) -> list[tuple[float, float]]:
    """Energy of the stationary point of the shifted functional at each multiplier.

    The coefficient ``p`` that dominates the exact ground state is pinned to
    ``-1`` and the others solve ``(H - lam)_rr b = (H - lam)_rp``. The
    reported energy is the Rayleigh quotient of that vector. At ``lam`` equal
    to the lowest eigenvalue the vector is the ground state, so the curve
    touches the exact energy there.
    """
    H = np.asarray(getattr(H, "entries", H), dtype=float)
    dim = H.shape[0]
    p = int(np.argmax(np.abs(exact_diagonalize(H).ground_state)))
    rest = np.array([i for i in range(dim) if i != p], dtype=int)
    out = []
    for lam in lambdas:
        a = np.empty(dim)
        a[p] = -1.0
        if rest.size:
            S = H[np.ix_(rest, rest)] - lam * np.eye(rest.size)
            a[rest] = np.linalg.lstsq(S, H[rest, p], rcond=None)[0]
        out.append((float(lam), rayleigh_quotient(H, a)))
    return out


def _existing(path: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise _InputError(f"no such file: {path}")
    return p


def _writable(path: str | None) -> Path | None:
    if path is None:
        return None
    p = Path(path)
    if not p.parent.exists():
        raise _InputError(f"output directory does not exist: {p.parent}")
    return p


def _config(args, dim: int) -> RunConfig:
    cfg = load_config(_existing(args.config), dim) if args.config else RunConfig.for_dim(dim)
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "topology", None):
        overrides["topology"] = args.topology
    if getattr(args, "local_search", False):
        overrides["local_search"] = True
    cfg = cfg.replace(**overrides)
    cfg.validate_for(dim)
    return cfg


def cmd_solve(args) -> int:
    matrix_path = _existing(args.matrix)
    out = _writable(args.out)
    trace_path = _writable(args.trace) or (out.with_name(out.name + ".trace") if out else None)
    H = load_matrix(matrix_path)
    cfg = _config(args, H.dim)
    result = run_qae(H, cfg)
    if out is not None:
        write_result(result, out)
        write_trace(result.trace, trace_path)
    elif trace_path is not None:
        write_trace(result.trace, trace_path)
    print(f"energy {fmt(result.final_energy)}")
    print(f"repeats {len(result.trace)}")
    for flag in result.flags:
        print(f"warning: {flag}", file=sys.stderr)
    return EXIT_OK


def cmd_diag(args) -> int:
    H = load_matrix(_existing(args.matrix))
    eig = exact_diagonalize(H)
    print(f"ground {fmt(eig.ground_energy)}")
    for k, value in enumerate(eig.eigenvalues):
        print(f"eigenvalue {k} {fmt(value)}")
    return EXIT_OK


def cmd_fss(args) -> int:
    if len(args.matrix) != 2:
        raise _InputError("fss needs exactly two --matrix arguments: lower J first, then upper J")
    lower_path, upper_path = (_existing(p) for p in args.matrix)
    energies = []
    for path in (lower_path, upper_path):
        H = load_matrix(path)
        energies.append(run_qae(H, _config(args, H.dim)).final_energy)
    print(f"lower {fmt(energies[0])}")
    print(f"upper {fmt(energies[1])}")
    print(f"fss {fmt(fine_structure_splitting(*energies))}")
    return EXIT_OK


def cmd_compare(args) -> int:
    if args.reps < 1:
        raise _InputError("--reps must be at least 1")
    H = load_matrix(_existing(args.matrix))
    cfg = _config(args, H.dim)
    exact = exact_diagonalize(H).ground_energy
    energies = []
    for k in range(args.reps):
        run_cfg = cfg.replace(seed=(cfg.seed + k) % 2**64)
        energies.append(run_qae(H, run_cfg).final_energy)
        print(f"run {k} seed {run_cfg.seed} energy {fmt(energies[-1])}")
    values = np.array(energies)
    mean = float(values.mean())
    sd = float(values.std(ddof=1)) if values.size > 1 else 0.0
    print(f"mean {fmt(mean)}")
    print(f"sd {fmt(sd)}")
    print(f"exact {fmt(exact)}")
    print(f"delta_percent {fmt(percent_error(exact, mean))}")
    return EXIT_OK


def cmd_lambda_scan(args) -> int:
    if args.steps < 2:
        raise _InputError("--steps must be at least 2")
    if not args.lambda_min < args.lambda_max:
        raise _InputError("need --lambda-min < --lambda-max")
    H = load_matrix(_existing(args.matrix))
    for lam, energy in lambda_scan(H, np.linspace(args.lambda_min, args.lambda_max, args.steps)):
        print(f"{fmt(lam)} {fmt(energy)}")
    return EXIT_OK


def cmd_gen_matrix(args) -> int:
    out = _writable(args.out)
    try:
        H = generate_ci_like_matrix(args.dim, args.gap, args.coupling, args.seed)
    except ValueError as exc:
        raise _InputError(str(exc)) from None
    write_matrix(H, out)
    print(f"wrote {args.dim}x{args.dim} matrix to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qae", description="Lowest eigenvalue of a symmetric matrix by iterated QUBO annealing.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    verbs = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    def run_flags(p):
        p.add_argument("--config", help="key = value run configuration")
        p.add_argument("--seed", type=int, help="overrides the config seed")
        p.add_argument("--topology", choices=["complete", "grid-like"])
        p.add_argument("--local-search", action="store_true", help="steepest-descent every sample")

    p = verbs.add_parser("solve", help="run QAE on one matrix")
    p.add_argument("--matrix", required=True)
    p.add_argument("--out", help="result JSON; the trace goes next to it unless --trace is given")
    p.add_argument("--trace", help="per-Repeat trace file")
    run_flags(p)
    p.set_defaults(func=cmd_solve)

    p = verbs.add_parser("diag", help="exact eigenvalues by Jacobi rotation")
    p.add_argument("--matrix", required=True)
    p.set_defaults(func=cmd_diag)

    p = verbs.add_parser("fss", help="energy splitting between two matrices")
    p.add_argument("--matrix", action="append", required=True, help="give twice: lower J, then upper J")
    run_flags(p)
    p.set_defaults(func=cmd_fss)

    p = verbs.add_parser("compare", help="repeated QAE runs against the exact energy")
    p.add_argument("--matrix", required=True)
    p.add_argument("--reps", type=int, default=5)
    run_flags(p)
    p.set_defaults(func=cmd_compare)

    p = verbs.add_parser("lambda-scan", help="energy versus multiplier (illustrative)")
    p.add_argument("--matrix", required=True)
    p.add_argument("--lambda-min", type=float, required=True)
    p.add_argument("--lambda-max", type=float, required=True)
    p.add_argument("--steps", type=int, default=21)
    p.set_defaults(func=cmd_lambda_scan)

    p = verbs.add_parser("gen-matrix", help="write a synthetic CI-like matrix")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--gap", type=float, default=1.0)
    p.add_argument("--coupling", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_matrix)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except (_InputError, *_INPUT_ERRORS) as exc:
        print(f"qae: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except _RUNTIME_ERRORS as exc:
        print(f"qae: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
