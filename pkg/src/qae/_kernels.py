"""Compiled inner loops for the samplers."""
import numpy as np
from numba import njit


@njit(cache=True)
def _splitmix64(x):
    x = (x + np.uint64(0x9E3779B97F4A7C15)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    z = x
    z = ((z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    z = ((z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def _metropolis(u, bd):
    """``u < exp(-bd)`` with the exponential skipped where the answer is known."""
    if u < 1.0 - bd:  # exp(-x) >= 1 - x
        return True
    if bd > 40.0:  # exp(-bd) lies below the 2**-53 grid of u
        return u == 0.0
    return u < np.exp(-bd)


@njit(cache=True)
def anneal_reads(linear, indptr, indices, weights, betas, read_seeds, initial, out):
    """Single-spin-flip Metropolis chains, one per read.

    Couplings are given in CSR form over the symmetric coupling matrix. Each
    read owns an independent xorshift stream seeded from ``read_seeds``.
    """
    n = linear.shape[0]
    n_reads = read_seeds.shape[0]
    field = np.empty(n)
    for r in range(n_reads):
        state = _splitmix64(np.uint64(read_seeds[r]))
        if state == 0:
            state = np.uint64(1)
        x = out[r]
        for i in range(n):
            x[i] = initial[r, i]
        for i in range(n):
            f = linear[i]
            for p in range(indptr[i], indptr[i + 1]):
                f += weights[p] * x[indices[p]]
            field[i] = f
        for s in range(betas.shape[0]):
            beta = betas[s]
            for i in range(n):
                # flipping x[i] changes the energy by (1 - 2 x[i]) * field[i]
                delta = field[i] if x[i] == 0 else -field[i]
                accept = delta <= 0.0
                if not accept:
                    state ^= (state << np.uint64(13)) & np.uint64(0xFFFFFFFFFFFFFFFF)
                    state ^= state >> np.uint64(7)
                    state ^= (state << np.uint64(17)) & np.uint64(0xFFFFFFFFFFFFFFFF)
                    u = (state >> np.uint64(11)) * (1.0 / 9007199254740992.0)
                    accept = _metropolis(u, beta * delta)
                if accept:
                    step = 1.0 if x[i] == 0 else -1.0
                    x[i] = 1 - x[i]
                    for p in range(indptr[i], indptr[i + 1]):
                        field[indices[p]] += step * weights[p]


@njit(cache=True)
def anneal_reads_dense(linear, couplings, betas, read_seeds, initial, out):
    """Same chains as :func:`anneal_reads` over a dense symmetric coupling matrix."""
    n = linear.shape[0]
    n_reads = read_seeds.shape[0]
    field = np.empty(n)
    for r in range(n_reads):
        state = _splitmix64(np.uint64(read_seeds[r]))
        if state == 0:
            state = np.uint64(1)
        x = out[r]
        for i in range(n):
            x[i] = initial[r, i]
        for i in range(n):
            f = linear[i]
            for j in range(n):
                f += couplings[i, j] * x[j]
            field[i] = f
        for s in range(betas.shape[0]):
            beta = betas[s]
            for i in range(n):
                delta = field[i] if x[i] == 0 else -field[i]
                accept = delta <= 0.0
                if not accept:
                    state ^= state << np.uint64(13)
                    state ^= state >> np.uint64(7)
                    state ^= state << np.uint64(17)
                    u = (state >> np.uint64(11)) * (1.0 / 9007199254740992.0)
                    accept = _metropolis(u, beta * delta)
                if accept:
                    step = 1.0 if x[i] == 0 else -1.0
                    x[i] = 1 - x[i]
                    for j in range(n):
                        field[j] += step * couplings[i, j]


@njit(cache=True)
def descend(linear, couplings, X):
    """Greedy single-flip descent applied in place to each row of ``X``."""
    n_samples, n = X.shape
    field = np.empty(n)
    for r in range(n_samples):
        x = X[r]
        for i in range(n):
            f = linear[i]
            for j in range(n):
                f += couplings[i, j] * x[j]
            field[i] = f
        while True:
            best = 0.0
            best_i = -1
            for i in range(n):
                delta = field[i] if x[i] == 0 else -field[i]
                if delta < best:
                    best = delta
                    best_i = i
            if best_i < 0:
                break
            step = 1.0 if x[best_i] == 0 else -1.0
            x[best_i] = 1 - x[best_i]
            for j in range(n):
                field[j] += step * couplings[best_i, j]
