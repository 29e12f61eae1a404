"""Seedable random streams and the dense complex linear-algebra kernel.

Every stochastic routine in the package takes a :class:`numpy.random.Generator`.
Generators are obtained from an :class:`RngStream`, which maps a
``(seed, stream-id)`` pair onto an independent Philox counter-based stream, so
a drop evaluated in a worker process draws exactly the same numbers as the
same drop evaluated serially.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

__all__ = [
    "RngStream",
    "sample_uniform",
    "sample_poisson",
    "sample_normal",
    "hermitian_eigvals",
    "svd",
    "HERMITIAN_RTOL",
]

# relative tolerance on ||M - M^H|| / ||M|| accepted as Hermitian
HERMITIAN_RTOL = 1e-10


@dataclass(frozen=True)
class RngStream:
    """A reproducible random stream identified by ``(seed, stream_id)``.

    ``stream_id`` is a tuple of non-negative integers so streams can be nested,
    e.g. ``(model, drop, attempt)``.
    """

    seed: int
    stream_id: Tuple[int, ...] = ()

    def __post_init__(self):
        if self.seed < 0 or self.seed >= 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        if any(k < 0 for k in self.stream_id):
            raise ValueError(f"stream id entries must be non-negative, got {self.stream_id}")

    def substream(self, *keys: int) -> "RngStream":
        """Child stream; independent of the parent and of its siblings."""
        return RngStream(self.seed, self.stream_id + tuple(int(k) for k in keys))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.stream_id)
        return np.random.Generator(np.random.Philox(ss))


def sample_uniform(rng: np.random.Generator, lo: float, hi: float, size=None):
    """Uniform draw(s) on ``[lo, hi)``; a degenerate interval returns ``lo``."""
    if lo > hi:
        raise ValueError(f"lower bound {lo} exceeds upper bound {hi}")
    if lo == hi:
        return lo if size is None else np.full(size, float(lo))
    return rng.uniform(lo, hi, size)


def sample_poisson(rng: np.random.Generator, mean: float, size=None):
    if not mean > 0:
        raise ValueError(f"Poisson mean must be positive, got {mean}")
    out = rng.poisson(mean, size)
    return int(out) if size is None else out


def sample_normal(rng: np.random.Generator, sigma: float, size=None):
    """Zero-mean Gaussian draw(s) with standard deviation ``sigma``."""
    if sigma < 0:
        raise ValueError(f"standard deviation must be non-negative, got {sigma}")
    if sigma == 0:
        return 0.0 if size is None else np.zeros(size)
    return rng.normal(0.0, sigma, size)


def hermitian_eigvals(m: np.ndarray) -> np.ndarray:
    """Real eigenvalues of a Hermitian matrix, sorted in descending order.

    Raises
    ------
    ValueError
        If ``m`` is not square or departs from Hermitian symmetry by more
        than :data:`HERMITIAN_RTOL` (relative Frobenius norm).
    """
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    scale = np.linalg.norm(m)
    if scale > 0 and np.linalg.norm(m - m.conj().T) > HERMITIAN_RTOL * scale:
        raise ValueError("matrix is not Hermitian within tolerance")
    return np.linalg.eigvalsh(m)[::-1]


def svd(m: np.ndarray, full_matrices: bool = False):
    """Singular value decomposition ``m = U diag(s) V^H``.

    Returns
    -------
    (U, s, V) : tuple of np.ndarray
        Left singular vectors, singular values in descending order, and the
        right singular vectors as columns (note: ``V``, not ``V^H``).
    """
    m = np.asarray(m)
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    u, s, vh = np.linalg.svd(m, full_matrices=full_matrices)
    return u, s, vh.conj().T
