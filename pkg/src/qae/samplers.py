"""QUBO minimizers: simulated annealing, exhaustive enumeration and steepest descent."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from qae import _kernels
from qae.encoding import QuboModel

BRUTE_FORCE_LIMIT = 24


class SamplerError(ValueError):
    pass


@dataclass(frozen=True)
class AnnealSchedule:
    """Geometric inverse-temperature sweep from ``beta_start`` to ``beta_end``."""

    sweeps: int = 1000
    beta_start: float = 0.1
    beta_end: float = 10.0

    def __post_init__(self):
        if self.sweeps < 1:
            raise SamplerError(f"sweeps must be >= 1, got {self.sweeps}")
        if not 0 < self.beta_start < self.beta_end:
            raise SamplerError("need 0 < beta_start < beta_end")

    def betas(self) -> np.ndarray:
        if self.sweeps == 1:
            return np.array([self.beta_end])
        return np.geomspace(self.beta_start, self.beta_end, self.sweeps)


@dataclass
class SampleSet:
    """Distinct assignments ranked by energy, with occurrence counts."""

    assignments: np.ndarray
    energies: np.ndarray
    counts: np.ndarray
    source: str
    info: dict = field(default_factory=dict)

    @classmethod
    def from_samples(cls, model: QuboModel, samples: np.ndarray, source: str, **info) -> "SampleSet":
        samples = np.asarray(samples, dtype=np.int8)
        if samples.ndim != 2:
            raise ValueError("samples must be 2-D")
        uniq, counts = np.unique(samples, axis=0, return_counts=True)
        energies = model.energies(uniq)
        # np.unique orders rows lexicographically, so a stable sort keeps ties deterministic
        order = np.argsort(energies, kind="stable")
        return cls(uniq[order], energies[order], counts[order], source, dict(info))

    def __len__(self) -> int:
        return self.assignments.shape[0]

    @property
    def first(self) -> tuple[np.ndarray, float]:
        return self.assignments[0], float(self.energies[0])

    @property
    def num_reads(self) -> int:
        return int(self.counts.sum())


def _csr(model: QuboModel):
    J = model.couplings()
    indptr = np.zeros(model.num_vars + 1, dtype=np.int64)
    indices = []
    weights = []
    for i in range(model.num_vars):
        nz = np.flatnonzero(J[i])
        indices.append(nz)
        weights.append(J[i, nz])
        indptr[i + 1] = indptr[i] + nz.shape[0]
    return indptr, np.concatenate(indices).astype(np.int64), np.concatenate(weights).astype(float)


def _prefer_dense(model: QuboModel) -> bool:
    # dense rows vectorize well; CSR wins only on large sparse hardware graphs
    n = model.num_vars
    return n <= 64 or 8 * np.count_nonzero(model.quadratic) >= n * n


def read_seeds(seed: int, reads: int) -> np.ndarray:
    """Per-read seeds derived from one master seed."""
    ss = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF)
    return ss.generate_state(reads, dtype=np.uint64)


def simulated_anneal(
    model: QuboModel,
    reads: int = 1000,
    schedule: AnnealSchedule | None = None,
    seed: int = 0,
    check_energy: bool = False,
) -> SampleSet:
    """Sample a QUBO with independent Metropolis annealing chains.

    Args:
        model: The QUBO to minimize.
        reads: Number of independent chains; one sample is returned per chain.
        schedule: Inverse-temperature schedule. Defaults to 1000 geometric sweeps
            from 0.1 to 10.
        seed: Master seed. Each read gets its own derived stream, so the result
            does not depend on the order in which reads execute.
        check_energy: Run the slow reference chain that recomputes the full
            energy after every accepted flip and asserts it matches the
            incremental bookkeeping to 1e-9.
    """
    if reads < 1:
        raise SamplerError(f"reads must be >= 1, got {reads}")
    if model.num_vars < 1:
        raise SamplerError("model has no variables")
    schedule = schedule or AnnealSchedule()
    seeds = read_seeds(seed, reads)
    # initial states come from a second stream of the same master seed
    init_rng = np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, 1])
    initial = init_rng.integers(0, 2, size=(reads, model.num_vars), dtype=np.int8)
    out = np.empty_like(initial)
    betas = schedule.betas()
    if check_energy:
        _checked_anneal(model, *_csr(model), betas, seeds, initial, out)
    elif _prefer_dense(model):
        J = np.ascontiguousarray(model.couplings())
        _kernels.anneal_reads_dense(model.linear, J, betas, seeds, initial, out)
    else:
        _kernels.anneal_reads(model.linear, *_csr(model), betas, seeds, initial, out)
    return SampleSet.from_samples(model, out, "simulated-annealing", seed=seed, sweeps=schedule.sweeps)


def autoscaled(model: QuboModel) -> QuboModel:
    """Copy of ``model`` divided by its largest absolute bias.

    A fixed inverse-temperature range only anneals well when the energy
    scale is fixed too, so annealing backends normalize biases into
    ``[-1, 1]`` first. Minimizers are unchanged by the positive rescaling.
    """
    peak = max(float(np.max(np.abs(model.linear), initial=0.0)), float(np.max(np.abs(model.quadratic), initial=0.0)))
    if peak == 0.0:
        return model
    return QuboModel(model.linear / peak, model.quadratic / peak, model.offset / peak)


def rescore(model: QuboModel, sampleset: SampleSet) -> SampleSet:
    """Re-evaluate a sample set's energies under ``model``."""
    X = np.repeat(sampleset.assignments, sampleset.counts, axis=0)
    return SampleSet.from_samples(model, X, sampleset.source, **sampleset.info)


def _checked_anneal(model, indptr, indices, weights, betas, seeds, initial, out):
    mask = np.uint64(0xFFFFFFFFFFFFFFFF)
    splitmix = _kernels._splitmix64.py_func
    J = model.couplings()
    with np.errstate(over="ignore"):  # splitmix relies on wrap-around
        _checked_chains(model, J, splitmix, mask, indptr, indices, weights, betas, seeds, initial, out)


def _checked_chains(model, J, splitmix, mask, indptr, indices, weights, betas, seeds, initial, out):
    for r in range(seeds.shape[0]):
        state = splitmix(np.uint64(seeds[r])) or np.uint64(1)
        x = initial[r].copy()
        fld = model.linear + J @ x
        energy = model.energy(x)
        for beta in betas:
            for i in range(model.num_vars):
                delta = fld[i] if x[i] == 0 else -fld[i]
                accept = delta <= 0.0
                if not accept:
                    state ^= (state << np.uint64(13)) & mask
                    state ^= state >> np.uint64(7)
                    state ^= (state << np.uint64(17)) & mask
                    u = float(state >> np.uint64(11)) * (1.0 / 9007199254740992.0)
                    accept = _kernels._metropolis.py_func(u, beta * delta)
                if accept:
                    step = 1.0 if x[i] == 0 else -1.0
                    x[i] = 1 - x[i]
                    for p in range(indptr[i], indptr[i + 1]):
                        fld[indices[p]] += step * weights[p]
                    energy += delta
                    full = model.energy(x)
                    if abs(full - energy) > 1e-9:
                        raise AssertionError(f"incremental energy {energy} drifted from {full}")
        out[r] = x


def brute_force(model: QuboModel, top_k: int | None = None) -> SampleSet:
    """Enumerate every assignment; the first entry of the result is a global optimum.

    Args:
        model: QUBO with at most 24 variables.
        top_k: Keep only the ``top_k`` lowest-energy assignments.
    """
    n = model.num_vars
    if n > BRUTE_FORCE_LIMIT:
        raise SamplerError(f"refusing to enumerate 2**{n} assignments (limit {BRUTE_FORCE_LIMIT} variables)")
    if n == 0:
        raise SamplerError("model has no variables")
    energies = np.empty(1 << n)
    chunk = 1 << min(n, 16)
    for start in range(0, 1 << n, chunk):
        X = _bits(np.arange(start, start + chunk, dtype=np.int64), n)
        energies[start:start + chunk] = model.energies(X)
    order = np.argsort(energies, kind="stable")
    if top_k is not None:
        order = order[:top_k]
    return SampleSet(_bits(order, n), energies[order], np.ones(order.shape[0], dtype=np.int64), "brute-force")


def _bits(codes: np.ndarray, n: int) -> np.ndarray:
    # variable 0 is the most significant bit of the code
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((codes[:, None] >> shifts) & 1).astype(np.int8)


def steepest_descent(model: QuboModel, start) -> tuple[np.ndarray, float]:
    """Flip the bit with the largest energy decrease until no flip decreases it.

    Ties between equal decreases go to the lowest variable index.
    """
    x = np.array(start, dtype=np.int8).reshape(1, -1)
    if x.shape[1] != model.num_vars:
        raise ValueError(f"start has {x.shape[1]} entries, model has {model.num_vars} variables")
    _kernels.descend(model.linear, model.couplings(), x)
    return x[0], model.energy(x[0])


def refine(model: QuboModel, sampleset: SampleSet) -> SampleSet:
    """Steepest-descent every sample of ``sampleset``; counts carry over."""
    X = sampleset.assignments.copy()
    _kernels.descend(model.linear, model.couplings(), X)
    X = np.repeat(X, sampleset.counts, axis=0)
    return SampleSet.from_samples(model, X, "steepest-descent", **sampleset.info)
