"""Floating qubit encoding of CI coefficients and the QUBO form of the energy functional.

Each coefficient ``a[alpha]`` is carried by ``K`` binary variables laid out at
positions ``alpha*K + k``::

    a[alpha] = mu[alpha] + sigma * (-q[0] + sum_{k>=1} 2**-k * q[k])

so the first bit is a sign-like shift of ``-sigma`` and the remaining bits add a
binary fraction of ``sigma``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np


def sigma_for_iteration(i: int) -> float:
    """Shift scale used at (1-based) iteration ``i``: ``2**((1 - i) / 2)``."""
    if i < 1:
        raise ValueError(f"iteration index must be >= 1, got {i}")
    return 2.0 ** ((1 - i) / 2)


def bit_weights(K: int) -> np.ndarray:
    """Signed weights ``f_k * 2**-k`` of the ``K`` bits of one coefficient."""
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    w = 2.0 ** -np.arange(K, dtype=float)
    w[0] = -1.0
    return w


@dataclass(frozen=True)
class EncodingState:
    """Encoding parameters for one iteration.

    Attributes:
        mu: Previous coefficient estimates, one per basis state.
        sigma: Global shift scale.
        K: Bits per coefficient.
        iteration: 1-based iteration index the sigma was taken from.
    """

    mu: np.ndarray
    sigma: float
    K: int
    iteration: int = 1

    def __post_init__(self):
        mu = np.array(self.mu, dtype=float).reshape(-1)
        mu.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        if self.K < 1:
            raise ValueError(f"K must be >= 1, got {self.K}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    @classmethod
    def at_iteration(cls, mu, K: int, iteration: int) -> "EncodingState":
        return cls(mu=mu, sigma=sigma_for_iteration(iteration), K=K, iteration=iteration)

    @property
    def dim(self) -> int:
        return self.mu.shape[0]

    @property
    def num_vars(self) -> int:
        return self.dim * self.K

    def transform(self) -> np.ndarray:
        """Matrix ``C`` (dim x dim*K) with ``a = mu + C @ q``."""
        C = np.zeros((self.dim, self.num_vars))
        w = self.sigma * bit_weights(self.K)
        for alpha in range(self.dim):
            C[alpha, alpha * self.K:(alpha + 1) * self.K] = w
        return C


@dataclass
class QuboModel:
    """Quadratic model over binary variables.

    ``quadratic`` is stored strictly upper triangular; the energy of an
    assignment ``q`` is ``offset + linear @ q + q @ quadratic @ q``.
    """

    linear: np.ndarray
    quadratic: np.ndarray
    offset: float = 0.0

    def __post_init__(self):
        self.linear = np.asarray(self.linear, dtype=float).reshape(-1)
        n = self.linear.shape[0]
        Q = np.asarray(self.quadratic, dtype=float)
        if Q.shape != (n, n):
            raise ValueError(f"quadratic must be {n}x{n}, got {Q.shape}")
        # fold any lower-triangle entries onto the upper triangle; diagonal onto linear
        self.linear = self.linear + np.diag(Q)
        self.quadratic = np.triu(Q, 1) + np.tril(Q, -1).T
        self.offset = float(self.offset)

    @classmethod
    def from_symmetric(cls, M: np.ndarray, linear: np.ndarray, offset: float = 0.0) -> "QuboModel":
        """Model for ``offset + linear @ q + q @ M @ q`` with ``M`` symmetric."""
        M = np.asarray(M, dtype=float)
        return cls(linear=np.asarray(linear, dtype=float) + np.diag(M), quadratic=2.0 * np.triu(M, 1), offset=offset)

    @property
    def num_vars(self) -> int:
        return self.linear.shape[0]

    def couplings(self) -> np.ndarray:
        """Symmetric coupling matrix with zero diagonal."""
        return self.quadratic + self.quadratic.T

    def pairs(self) -> Iterator[tuple[int, int, float]]:
        rows, cols = np.nonzero(self.quadratic)
        for i, j in zip(rows.tolist(), cols.tolist()):
            yield i, j, float(self.quadratic[i, j])

    def quadratic_biases(self) -> np.ndarray:
        return self.quadratic[np.nonzero(self.quadratic)]

    def energy(self, assignment) -> float:
        return qubo_energy(self, assignment)

    def energies(self, samples: np.ndarray) -> np.ndarray:
        """Vectorized energies for a 2-D array of assignments (one per row)."""
        X = np.asarray(samples, dtype=float)
        return self.offset + X @ self.linear + np.einsum("si,ij,sj->s", X, self.quadratic, X)

    def subset(self, variables) -> "QuboModel":
        """Restrict to ``variables`` with every other variable clamped to 0."""
        idx = np.asarray(variables, dtype=int)
        sub_q = self.quadratic[np.ix_(idx, idx)]
        return QuboModel(self.linear[idx], sub_q, self.offset)

    def dump(self) -> str:
        """Debug text listing: ``v <i> <bias>`` and ``c <i> <j> <coupling>`` lines."""
        lines = [f"offset {self.offset!r}"]
        lines += [f"v {i} {b!r}" for i, b in enumerate(self.linear.tolist())]
        lines += [f"c {i} {j} {c!r}" for i, j, c in self.pairs()]
        return "\n".join(lines) + "\n"


def qubo_energy(model: QuboModel, assignment) -> float:
    q = np.asarray(assignment, dtype=float).reshape(-1)
    if q.shape[0] != model.num_vars:
        raise ValueError(f"assignment has {q.shape[0]} entries, model has {model.num_vars} variables")
    return float(model.offset + model.linear @ q + q @ model.quadratic @ q)


def shifted_matrix(H, lam: float) -> np.ndarray:
    H = np.asarray(H, dtype=float)
    return H - lam * np.eye(H.shape[0])


def build_qubo(H, lam: float, enc: EncodingState) -> QuboModel:
    """QUBO whose energy equals ``a @ (H - lam*I) @ a`` with ``a`` decoded from the bits.

    Args:
        H: Symmetric matrix (array-like or :class:`~qae.matrix_io.SymmetricMatrix`).
        lam: Lagrange multiplier for the normalization penalty.
        enc: Encoding parameters; ``enc.mu`` must have one entry per row of ``H``.
    """
    Hp = shifted_matrix(_as_array(H), lam)
    if enc.dim != Hp.shape[0]:
        raise ValueError(f"encoding has {enc.dim} coefficients but matrix is {Hp.shape[0]}x{Hp.shape[0]}")
    C = enc.transform()
    M = C.T @ Hp @ C
    linear = 2.0 * (C.T @ (Hp @ enc.mu))
    offset = float(enc.mu @ Hp @ enc.mu)
    return QuboModel.from_symmetric(M, linear, offset)


def functional(H, lam: float, a) -> float:
    """Energy functional ``sum_ab a_a a_b (H_ab - lam delta_ab)``."""
    a = np.asarray(a, dtype=float)
    return float(a @ shifted_matrix(_as_array(H), lam) @ a)


def decode_coefficient(bits, mu_alpha: float, sigma: float) -> float:
    bits = np.asarray(bits, dtype=float).reshape(-1)
    return float(mu_alpha + sigma * (bit_weights(bits.shape[0]) @ bits))


def decode_sample(assignment, enc: EncodingState) -> np.ndarray:
    q = np.asarray(assignment, dtype=float).reshape(-1)
    if q.shape[0] != enc.num_vars:
        raise ValueError(f"assignment has {q.shape[0]} bits, expected {enc.num_vars}")
    blocks = q.reshape(enc.dim, enc.K)
    return enc.mu + enc.sigma * (blocks @ bit_weights(enc.K))


def decode_samples(samples: np.ndarray, enc: EncodingState) -> np.ndarray:
    """Row-wise :func:`decode_sample` for a 2-D array of assignments."""
    X = np.asarray(samples, dtype=float)
    return enc.mu + enc.sigma * (X.reshape(X.shape[0], enc.dim, enc.K) @ bit_weights(enc.K))


def scale_coefficients(a) -> np.ndarray:
    """Rescale so the largest-magnitude entry becomes exactly -1.

    Ties in magnitude go to the lowest index.
    """
    a = np.asarray(a, dtype=float)
    idx = int(np.argmax(np.abs(a)))
    peak = a[idx]
    if peak == 0.0:
        raise ValueError("cannot scale an all-zero coefficient vector")
    # clip guards against 1 + ulp from the division, which would break idempotence
    out = np.clip(a * (-1.0 / peak), -1.0, 1.0)
    out[idx] = -1.0
    return out


def _as_array(H) -> np.ndarray:
    return np.asarray(getattr(H, "entries", H), dtype=float)
