"""Eigen analysis and multi-user precoding on narrowband channel matrices.

Two single-stream MU-MIMO schemes are compared:

* hybrid: per-user analog beam pair chosen from codebooks of array responses
  at the realization's own ray directions, followed by zero-forcing on the
  resulting ``K x K`` effective channel;
* block diagonalization (BD): fully digital, each user's precoder confined to
  the null space of all other users' channels.

Power is split equally among users in both schemes. All powers are linear
milliwatts; channel entries already carry path loss and element gains.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .antenna import ArrayGeometry, ChannelMatrix, array_response
from .errors import ConfigError, DegenerateDropError
from .mathkit import hermitian_eigvals, svd
from .rays import ChannelRealization

__all__ = [
    "EigenReport",
    "PrecoderSet",
    "ZF_CONDITION_LIMIT",
    "eigen_report",
    "beam_codebook",
    "hybrid_precode",
    "bd_precode",
    "spectral_efficiency",
    "rayleigh_baseline",
]

# effective-channel Gram condition number above which ZF is declared degenerate
ZF_CONDITION_LIMIT = 1e12


@dataclass
class EigenReport:
    eigenvalues: np.ndarray
    ratios: np.ndarray

    @property
    def spread(self) -> float:
        """Largest over smallest eigenvalue (``inf`` for rank-deficient channels)."""
        lo = self.eigenvalues[-1]
        return float(self.eigenvalues[0] / lo) if lo > 0 else float("inf")


def eigen_report(h: ChannelMatrix) -> EigenReport:
    """Eigenvalues of the smaller Gram matrix of ``h``, with their shares of the total."""
    m = h.entries
    gram = m @ m.conj().T if m.shape[0] <= m.shape[1] else m.conj().T @ m
    gram = 0.5 * (gram + gram.conj().T)
    lam = np.maximum(hermitian_eigvals(gram), 0.0)
    total = lam.sum()
    ratios = lam / total if total > 0 else np.zeros_like(lam)
    return EigenReport(lam, ratios)


@dataclass
class PrecoderSet:
    """Per-user transmit precoders and receive combiners for one drop.

    ``precoders`` is ``Nt x K`` with unit-norm columns, ``combiners`` a list
    of unit-norm receive vectors and ``power`` the per-user transmit power,
    so user ``k`` radiates ``power[k] * precoders[:, k]``. The hybrid
    scheme also fills the analog stage and baseband matrix.
    """

    precoders: np.ndarray
    combiners: List[np.ndarray]
    power: np.ndarray
    analog_tx: Optional[np.ndarray] = None
    baseband: Optional[np.ndarray] = None

    @property
    def n_users(self) -> int:
        return self.precoders.shape[1]

    @property
    def total_power(self) -> float:
        return float(np.sum(np.sum(np.abs(self.precoders) ** 2, axis=0) * self.power))


def beam_codebook(geometry: ArrayGeometry, az, zen) -> np.ndarray:
    """Analog beams steered at the given directions, one unit-norm column each.

    For cross-polarized arrays each direction yields two constant-modulus
    beams: both slant groups in phase, and in anti-phase.
    """
    a = array_response(geometry, np.atleast_1d(az), np.atleast_1d(zen))
    if geometry.n_pol == 1:
        return a
    half = geometry.n_elements // 2
    anti = a.copy()
    anti[half:] *= -1.0
    return np.concatenate([a, anti], axis=1)


def _best_pair(h: np.ndarray, w_book: np.ndarray, f_book: np.ndarray):
    gain = np.abs(w_book.conj().T @ (h @ f_book))
    i, j = np.unravel_index(int(np.argmax(gain)), gain.shape)
    return w_book[:, i], f_book[:, j]


def hybrid_precode(
    channels: Sequence[ChannelMatrix],
    realizations: Sequence[ChannelRealization],
    total_power: float,
    tx: ArrayGeometry,
    rx: Sequence[ArrayGeometry],
) -> PrecoderSet:
    """Analog beam selection per user, then ZF baseband on the effective channel.

    Raises
    ------
    DegenerateDropError
        If the effective channel Gram matrix is too ill-conditioned for ZF.
    """
    k = len(channels)
    analog_tx, combiners = [], []
    for h, real, rx_k in zip(channels, realizations, rx):
        f_book = beam_codebook(tx, real.aod_az, real.aod_zen)
        w_book = beam_codebook(rx_k, real.aoa_az, real.aoa_zen)
        w, f = _best_pair(h.entries, w_book, f_book)
        analog_tx.append(f)
        combiners.append(w)
    f_rf = np.column_stack(analog_tx)
    h_eff = np.vstack([w.conj() @ h.entries @ f_rf for w, h in zip(combiners, channels)])

    gram = h_eff @ h_eff.conj().T
    if not np.all(np.isfinite(gram)) or np.linalg.cond(gram) > ZF_CONDITION_LIMIT:
        raise DegenerateDropError("effective channel is singular; zero-forcing undefined")
    baseband = h_eff.conj().T @ np.linalg.inv(gram)
    precoders = f_rf @ baseband
    precoders = precoders / np.linalg.norm(precoders, axis=0)
    return PrecoderSet(precoders, combiners, np.full(k, total_power / k), f_rf, baseband)


def bd_precode(channels: Sequence[ChannelMatrix], total_power: float) -> PrecoderSet:
    """Single-stream block diagonalization with equal power per user.

    Raises
    ------
    ConfigError
        If some user's interference null space is empty.
    """
    k = len(channels)
    mats = [h.entries for h in channels]
    nt = mats[0].shape[1]
    precoders, combiners = [], []
    for i in range(k):
        others = [mats[j] for j in range(k) if j != i]
        if others:
            stacked = np.vstack(others)
            _, s, v = svd(stacked, full_matrices=True)
            tol = max(stacked.shape) * np.finfo(float).eps * (s[0] if len(s) else 0.0)
            rank = int(np.sum(s > tol))
            null = v[:, rank:]
        else:
            null = np.eye(nt, dtype=complex)
        if null.shape[1] == 0:
            raise ConfigError(f"user {i} has no interference-free transmit subspace")
        u, _, vv = svd(mats[i] @ null)
        precoders.append(null @ vv[:, 0])
        combiners.append(u[:, 0])
    f = np.column_stack(precoders)
    f = f / np.linalg.norm(f, axis=0)
    return PrecoderSet(f, combiners, np.full(k, total_power / k))


def spectral_efficiency(precoders: PrecoderSet, channels: Sequence[ChannelMatrix],
                        noise_power: float) -> np.ndarray:
    """Per-user SINR-based spectral efficiency in bps/Hz."""
    k = len(channels)
    se = np.zeros(k)
    for i, (h, w) in enumerate(zip(channels, precoders.combiners)):
        resp = np.abs(w.conj() @ h.entries @ precoders.precoders) ** 2 * precoders.power
        desired = resp[i]
        interference = resp.sum() - desired
        se[i] = np.log2(1.0 + desired / (noise_power + interference))
    return se


def rayleigh_baseline(rng: np.random.Generator, dims=(8, 256), gain_db: float = 0.0,
                      carrier_ghz: float = 28.0) -> ChannelMatrix:
    """I.i.d. unit-variance complex Gaussian channel scaled by ``gain_db``."""
    nr, nt = dims
    g = rng.standard_normal((nr, nt, 2)) @ np.array([1.0, 1j]) / np.sqrt(2.0)
    return ChannelMatrix(g * 10.0 ** (gain_db / 20.0), carrier_ghz, gain_db)
