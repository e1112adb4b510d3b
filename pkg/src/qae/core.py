"""The QAE Repeat loop, its decomposition strategies and the exact-diagonalization oracle."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from qae.config import RunConfig
from qae.embedding import EmbeddingError, build_topology, chain_strength, embed, embed_apply, unembed_samples
from qae.encoding import (
    EncodingState,
    QuboModel,
    build_qubo,
    decode_samples,
    scale_coefficients,
    shifted_matrix,
    sigma_for_iteration,
)
from qae.matrix_io import SymmetricMatrix
from qae.samplers import AnnealSchedule, SamplerError, SampleSet, autoscaled, refine, rescore, simulated_anneal

log = logging.getLogger(__name__)

DEGENERACY_FLOOR = 1e-12


class NumericalError(RuntimeError):
    pass


# --- decomposition ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PriorityList:
    """Coefficient indices ordered by estimated importance, reference first.

    ``flagged`` lists the indices whose score hit the near-degenerate cap.
    """

    order: tuple[int, ...]
    scores: tuple[float, ...]
    flagged: tuple[int, ...] = ()

    def __len__(self) -> int:
        return len(self.order)


def priority_list(H) -> PriorityList:
    """Rank configurations by their first-order perturbative weight in the reference state.

    Configuration ``a`` scores ``|H[a,0] / (H[0,0] - H[a,a])|``; the reference
    (index 0) always comes first. A denominator below 1e-12 in magnitude is
    replaced by 1e-12 and the index is reported in ``flagged``.
    """
    H = _entries(H)
    dim = H.shape[0]
    scores = [math.inf]
    flagged = []
    for a in range(1, dim):
        denom = abs(H[0, 0] - H[a, a])
        if denom < DEGENERACY_FLOOR:
            denom = DEGENERACY_FLOOR
            flagged.append(a)
        scores.append(abs(H[a, 0]) / denom)
    rest = sorted(range(1, dim), key=lambda a: (-scores[a], a))
    return PriorityList(order=(0, *rest), scores=tuple(scores), flagged=tuple(flagged))


def default_priority(model: QuboModel, current) -> np.ndarray:
    """Qubit indices by descending ``|energy change|`` of a single flip from ``current``."""
    x = np.asarray(current, dtype=float).reshape(-1)
    if x.shape[0] != model.num_vars:
        raise ValueError(f"current has {x.shape[0]} entries, model has {model.num_vars} variables")
    local = model.linear + model.couplings() @ x
    impact = np.abs(np.where(x == 0, local, -local))
    return np.lexsort((np.arange(model.num_vars), -impact))


def select_subspace(pl, gamma: int, repeat_index: int) -> list[int]:
    """Cyclic window of ``gamma`` indices from the priority order for a 1-based Repeat."""
    order = pl.order if isinstance(pl, PriorityList) else tuple(pl)
    dim = len(order)
    if not 1 <= gamma <= dim:
        raise ValueError(f"gamma must lie in [1, {dim}], got {gamma}")
    start = ((repeat_index - 1) * gamma) % dim
    return [order[(start + j) % dim] for j in range(gamma)]


def extract_subqubo(H, lam: float, enc: EncodingState, subspace, frozen) -> QuboModel:
    """QUBO over the bits of the ``subspace`` coefficients with all others held at ``frozen``.

    The free coefficients are encoded around ``enc.mu``; couplings to frozen
    coefficients become linear biases and frozen-frozen terms go to the offset,
    so the sub-model's energy equals the full functional at the merged vector.
    """
    subspace = [int(a) for a in subspace]
    if not subspace:
        raise ValueError("subspace is empty")
    Hp = shifted_matrix(_entries(H), lam)
    frozen = np.asarray(frozen, dtype=float)
    if frozen.shape[0] != Hp.shape[0] or enc.dim != Hp.shape[0]:
        raise ValueError("frozen and encoding must have one entry per basis state")
    base = frozen.copy()
    base[subspace] = enc.mu[subspace]
    sub_enc = EncodingState(mu=enc.mu[subspace], sigma=enc.sigma, K=enc.K, iteration=enc.iteration)
    C = sub_enc.transform()
    M = C.T @ Hp[np.ix_(subspace, subspace)] @ C
    linear = 2.0 * (C.T @ (Hp[subspace] @ base))
    return QuboModel.from_symmetric(M, linear, float(base @ Hp @ base))


def subspace_variables(subspace, K: int) -> np.ndarray:
    return np.concatenate([np.arange(a * K, (a + 1) * K) for a in subspace])


# --- energies and the oracle -----------------------------------------------------------------


def rayleigh_quotient(H, a) -> float:
    a = np.asarray(a, dtype=float)
    norm = float(a @ a)
    if norm == 0.0:
        raise ValueError("Rayleigh quotient of the zero vector is undefined")
    return float(a @ _entries(H) @ a) / norm


def rayleigh_quotients(H, A: np.ndarray) -> np.ndarray:
    """Row-wise Rayleigh quotients; zero rows give ``+inf``."""
    A = np.asarray(A, dtype=float)
    num = np.einsum("si,ij,sj->s", A, _entries(H), A)
    den = np.einsum("si,si->s", A, A)
    out = np.full(A.shape[0], math.inf)
    ok = den > 0
    out[ok] = num[ok] / den[ok]
    return out


@dataclass(frozen=True)
class EigenResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    sweeps: int = 0

    @property
    def ground_energy(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def ground_state(self) -> np.ndarray:
        return self.eigenvectors[:, 0]


def exact_diagonalize(H, max_sweeps: int = 100) -> EigenResult:
    """Full spectrum of a symmetric matrix by cyclic Jacobi rotations.

    Raises:
        NumericalError: when the off-diagonal norm has not vanished after
            ``max_sweeps`` sweeps.
    """
    A = np.array(_entries(H), dtype=float)
    n = A.shape[0]
    if n > 64:
        raise ValueError(f"exact_diagonalize supports dim <= 64, got {n}")
    V = np.eye(n)
    tol = 1e-14 * max(np.linalg.norm(A), np.finfo(float).tiny)
    for sweep in range(1, max_sweeps + 1):
        off = np.sqrt(np.sum(np.triu(A, 1) ** 2))
        if off <= tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-3 * tol:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                # A <- J^T A J applied to rows/columns p, q
                Ap = A[:, p].copy()
                Aq = A[:, q].copy()
                A[:, p] = c * Ap - s * Aq
                A[:, q] = s * Ap + c * Aq
                Ap = A[p, :].copy()
                Aq = A[q, :].copy()
                A[p, :] = c * Ap - s * Aq
                A[q, :] = s * Ap + c * Aq
                A[p, q] = A[q, p] = 0.0
                Vp = V[:, p].copy()
                Vq = V[:, q].copy()
                V[:, p] = c * Vp - s * Vq
                V[:, q] = s * Vp + c * Vq
    else:
        off = np.sqrt(np.sum(np.triu(A, 1) ** 2))
        if off > tol:
            raise NumericalError(f"Jacobi did not converge in {max_sweeps} sweeps (off-norm {off:.3g})")
    evals = np.diag(A).copy()
    order = np.argsort(evals, kind="stable")
    return EigenResult(evals[order], V[:, order], sweep)


def fine_structure_splitting(E_lower: float, E_upper: float) -> float:
    """``E_upper - E_lower``, sign preserved."""
    if not (math.isfinite(E_lower) and math.isfinite(E_upper)):
        raise ValueError("energies must be finite")
    return E_upper - E_lower


# --- the Repeat loop -------------------------------------------------------------------------


@dataclass(frozen=True)
class RepeatRecord:
    repeat_index: int
    lam: float
    repeat_energy: float
    best_energy: float
    subspace: tuple[int, ...]
    chain_break_fraction: float = 0.0
    num_candidates: int = 0

    def as_dict(self) -> dict:
        return {
            "repeat_index": self.repeat_index,
            "lambda": self.lam,
            "repeat_energy": self.repeat_energy,
            "best_energy": self.best_energy,
            "subspace_indices": list(self.subspace),
            "chain_break_fraction": self.chain_break_fraction,
        }


class ConvergenceTrace(list):
    """Per-Repeat records, in execution order."""

    def best_energies(self) -> np.ndarray:
        return np.array([r.best_energy for r in self])

    def repeat_energies(self) -> np.ndarray:
        return np.array([r.repeat_energy for r in self])

    def lambdas(self) -> np.ndarray:
        return np.array([r.lam for r in self])

    def mean_chain_break_fraction(self) -> float:
        return float(np.mean([r.chain_break_fraction for r in self])) if self else 0.0

    def repeats_to_error(self, exact: float, tol: float) -> int | None:
        """First Repeat index whose best energy is within ``tol`` of ``exact``."""
        for r in self:
            if r.best_energy - exact <= tol:
                return r.repeat_index
        return None


@dataclass
class ResultRecord:
    final_energy: float
    final_coefficients: np.ndarray
    trace: ConvergenceTrace
    config_echo: RunConfig
    flags: list[str] = field(default_factory=list)


class _Hardware:
    """Topology plus an embedding cache keyed on the sub-QUBO coupling pattern."""

    def __init__(self, cfg: RunConfig, num_logical: int):
        self.cfg = cfg
        self.topology = build_topology(cfg.topology, cfg.topology_size or None, num_logical)
        self._cache = {}

    def sample(self, model: QuboModel, schedule: AnnealSchedule, seed: int):
        key = (model.num_vars, np.packbits(model.quadratic != 0).tobytes())
        emb = self._cache.get(key)
        if emb is None:
            emb = embed(model, self.topology, seed=self.cfg.seed)
            self._cache[key] = emb
        strength = chain_strength(model, self.cfg.chain_strength_factor)
        hw_model = embed_apply(model, emb, strength, self.topology)
        hw = simulated_anneal(hw_model, self.cfg.reads_per_anneal, schedule, seed)
        logical, broken = unembed_samples(hw.assignments, emb)
        frac = float(np.average(broken, weights=hw.counts))
        X = np.repeat(logical, hw.counts, axis=0)
        return SampleSet.from_samples(model, X, "simulated-annealing", seed=seed), frac


def _repeat_seed(seed: int, repeat_index: int) -> int:
    return int(np.random.SeedSequence([int(seed), int(repeat_index)]).generate_state(1, dtype=np.uint64)[0])


def _scale_rows(A: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(A), axis=1)
    peak = A[np.arange(A.shape[0]), idx]
    out = np.clip(A * (-1.0 / peak)[:, None], -1.0, 1.0)
    out[np.arange(A.shape[0]), idx] = -1.0
    return out


def run_qae(
    H,
    cfg: RunConfig | None = None,
    initial_coefficients=None,
    initial_lambda: float | None = None,
    callback=None,
) -> ResultRecord:
    """Minimize the Rayleigh quotient of ``H`` with the QAE Repeat loop.

    Each Repeat builds the encoded functional around the best coefficients so
    far, selects a block of coefficients, anneals the corresponding sub-QUBO,
    merges every returned sample into the best vector, rescales it and keeps
    whichever merged vector has the lowest Rayleigh quotient. The multiplier
    then moves to the best energy found.

    Args:
        H: Symmetric matrix.
        cfg: Workflow parameters; defaults to :meth:`RunConfig.for_dim`.
        initial_coefficients: Optional starting vector in place of zeros.
        initial_lambda: Optional starting multiplier in place of ``H[0, 0]``.
        callback: Called with each :class:`RepeatRecord`; a truthy return
            value ends the run after that Repeat.
    """
    Hm = H if isinstance(H, SymmetricMatrix) else SymmetricMatrix(H)
    Hd = Hm.entries
    dim = Hm.dim
    cfg = cfg or RunConfig.for_dim(dim)
    cfg.validate_for(dim)
    K = cfg.K
    schedule = AnnealSchedule(cfg.sweeps, cfg.beta_start, cfg.beta_end)
    hardware = _Hardware(cfg, cfg.gamma * K) if cfg.topology != "complete" else None
    sweep_len = math.ceil(dim / cfg.gamma)

    pl = priority_list(Hd) if cfg.decomposer == "perturbation" else None
    visited: set[int] = set()

    if initial_coefficients is None:
        best = np.zeros(dim)
        best_energy = math.inf
    else:
        best = scale_coefficients(initial_coefficients)
        best_energy = rayleigh_quotient(Hd, best)
    lam = float(Hd[0, 0]) if initial_lambda is None else float(initial_lambda)

    trace = ConvergenceTrace()
    flags: list[str] = []
    if pl is not None and pl.flagged:
        flags.append(f"near-degenerate priority scores for indices {list(pl.flagged)}")
    stall = 0

    for r in range(1, cfg.total_repeats + 1):
        it = r if cfg.sigma_schedule == "repeat" else (r - 1) // sweep_len + 1
        enc = EncodingState(mu=best, sigma=sigma_for_iteration(it), K=K, iteration=it)

        if pl is not None:
            subspace = select_subspace(pl, cfg.gamma, r)
            variables = subspace_variables(subspace, K)
            sub = extract_subqubo(Hd, lam, enc, subspace, best)
        else:
            full = build_qubo(Hd, lam, enc)
            order = default_priority(full, np.zeros(full.num_vars))
            variables = _rolling_pick(order, visited, cfg.gamma * K)
            subspace = sorted({int(v) // K for v in variables})
            sub = full.subset(variables)

        seed = _repeat_seed(cfg.seed, r)
        try:
            scaled = autoscaled(sub)
            if hardware is None:
                samples = simulated_anneal(scaled, cfg.reads_per_anneal, schedule, seed)
                cbf = 0.0
            else:
                samples, cbf = hardware.sample(scaled, schedule, seed)
            samples = rescore(sub, samples)
        except (EmbeddingError, SamplerError) as exc:
            log.warning("Repeat %d skipped: %s", r, exc)
            flags.append(f"repeat {r} failed: {exc}")
            continue
        if cfg.local_search:
            samples = refine(sub, samples)

        X = np.zeros((len(samples), dim * K), dtype=np.int8)
        X[:, variables] = samples.assignments
        A = decode_samples(X, enc)
        nonzero = np.any(A != 0.0, axis=1)
        A = A[nonzero]
        if A.shape[0] == 0:
            repeat_energy = math.inf
        else:
            A = _scale_rows(A)
            energies = rayleigh_quotients(Hd, A)
            j = int(np.argmin(energies))
            repeat_energy = float(energies[j])
            if repeat_energy < best_energy:
                improvement = best_energy - repeat_energy
                best, best_energy = A[j], repeat_energy
                stall = stall + 1 if improvement < cfg.precision_target else 0
            else:
                stall += 1

        record = RepeatRecord(r, lam, repeat_energy, best_energy, tuple(subspace), cbf, int(A.shape[0]))
        trace.append(record)
        next_lam = best_energy if cfg.lambda_update == "best" else repeat_energy
        if math.isfinite(next_lam):
            lam = next_lam
        if cfg.early_exit and stall >= sweep_len:
            log.info("plateau after %d Repeats, stopping", r)
            break
        if callback is not None and callback(record):
            break

    if not math.isfinite(best_energy):
        raise NumericalError("no Repeat produced a usable coefficient vector")
    return ResultRecord(rayleigh_quotient(Hd, best), best, trace, cfg, flags)


def _rolling_pick(order: np.ndarray, visited: set[int], size: int) -> np.ndarray:
    """Top ``size`` qubits of ``order`` not picked since the last reset."""
    size = min(size, order.shape[0])
    fresh = [int(v) for v in order if int(v) not in visited]
    if len(fresh) < size:
        visited.clear()
        fresh = [int(v) for v in order]
    picked = sorted(fresh[:size])
    visited.update(picked)
    return np.asarray(picked, dtype=int)


def _entries(H) -> np.ndarray:
    return np.asarray(getattr(H, "entries", H), dtype=float)
