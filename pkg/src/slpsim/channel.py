"""Downlink channel model and the complex-to-real lifting.

A K-user, N-antenna downlink channel is a complex K x N matrix with i.i.d.
CN(0, 1) entries.  All precoding math runs in real coordinates: a complex
row h maps to the 2 x 2N block [[Re h, -Im h], [Im h, Re h]] and a complex
vector u to [Re u; Im u], so that the lifted product stacks the real and
imaginary parts of h @ u.  The stacked 2K x 2N lifting has full row rank
almost surely; its right pseudo-inverse is formed through a Cholesky solve
of the Gram matrix, never an explicit inverse.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

__all__ = [
    "RankDeficientChannel",
    "ChannelRealization",
    "lift_real",
    "lift_vector",
    "unlift_vector",
    "pseudo_inverse",
    "sample_channel",
    "channel_rng",
]

# smallest admissible eigenvalue of the Gram matrix of the lifted channel
_GRAM_EIG_FLOOR = 1e-10


class RankDeficientChannel(RuntimeError):
    """Lifted channel is numerically rank deficient."""


@dataclass(frozen=True)
class ChannelRealization:
    """A channel draw together with its lifted form and pseudo-inverse.

    Attributes:
        h: (K, N) complex channel matrix.
        h_lift: (2K, 2N) real lifting of h.
        h_pinv: (2N, 2K) right pseudo-inverse of h_lift.
    """

    h: np.ndarray
    h_lift: np.ndarray
    h_pinv: np.ndarray

    @property
    def n_users(self) -> int:
        return self.h.shape[0]

    @property
    def n_antennas(self) -> int:
        return self.h.shape[1]

    @classmethod
    def from_matrix(cls, h: np.ndarray) -> "ChannelRealization":
        """Build the lifted representation of a given complex channel.

        Raises:
            ValueError: more users than antennas.
            RankDeficientChannel: Gram matrix of the lifting is singular to
                working precision.
        """
        h = np.atleast_2d(np.asarray(h, dtype=complex))
        k, n = h.shape
        if k > n:
            raise ValueError(f"need at least as many antennas as users, got K={k}, N={n}")
        h_lift = lift_real(h)
        h_pinv = pseudo_inverse(h_lift)
        for arr in (h, h_lift, h_pinv):
            arr.setflags(write=False)
        return cls(h, h_lift, h_pinv)


def lift_real(h: np.ndarray) -> np.ndarray:
    """Real lifting of a complex matrix, one 2 x 2N block per row.

    Args:
        h: (K, N) complex matrix (a single row may be passed as shape (N,)).

    Returns:
        (2K, 2N) real matrix; rows 2k, 2k+1 are [Re h_k, -Im h_k] and
        [Im h_k, Re h_k].
    """
    h = np.atleast_2d(np.asarray(h, dtype=complex))
    k, n = h.shape
    out = np.empty((2 * k, 2 * n))
    out[0::2, :n] = h.real
    out[0::2, n:] = -h.imag
    out[1::2, :n] = h.imag
    out[1::2, n:] = h.real
    return out


def lift_vector(u: np.ndarray) -> np.ndarray:
    """Real lifting [Re u; Im u] of a complex vector."""
    u = np.asarray(u, dtype=complex)
    return np.concatenate([u.real, u.imag])


def unlift_vector(u_real: np.ndarray) -> np.ndarray:
    """Inverse of lift_vector."""
    u_real = np.asarray(u_real, dtype=float)
    n = u_real.shape[0] // 2
    return u_real[:n] + 1j * u_real[n:]


def pseudo_inverse(h_lift: np.ndarray) -> np.ndarray:
    """Right pseudo-inverse H^T (H H^T)^{-1} of a full-row-rank matrix.

    The Gram matrix is factorized with a Cholesky decomposition; a smallest
    eigenvalue below 1e-10 (or a failed factorization) raises
    RankDeficientChannel so the caller can resample.
    """
    gram = h_lift @ h_lift.T
    if np.linalg.eigvalsh(gram)[0] < _GRAM_EIG_FLOOR:
        raise RankDeficientChannel("lifted channel Gram matrix is numerically singular")
    try:
        factor = cho_factor(gram)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - caught by the eig floor
        raise RankDeficientChannel(str(exc)) from exc
    return cho_solve(factor, h_lift).T


def channel_rng(seed: int, channel_index: int) -> np.random.Generator:
    """Deterministic per-realization random stream.

    Streams are keyed on (seed, channel_index) through a counter-based
    generator, so realization c is the same no matter which worker draws it
    or in which order.
    """
    key = np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(channel_index)])
    return np.random.Generator(np.random.Philox(key=key))


def sample_channel(n_users: int, n_antennas: int, rng: np.random.Generator) -> ChannelRealization:
    """Draw an i.i.d. CN(0, 1) channel and its lifted representation.

    Redraws in the (measure-zero) event that the lifting is numerically rank
    deficient.

    Args:
        n_users: K >= 1.
        n_antennas: N >= K.
        rng: source of randomness.
    """
    if n_users < 1:
        raise ValueError(f"need at least one user, got K={n_users}")
    if n_users > n_antennas:
        raise ValueError(f"need at least as many antennas as users, got K={n_users}, N={n_antennas}")
    scale = 1.0 / np.sqrt(2.0)
    while True:
        h = scale * (
            rng.standard_normal((n_users, n_antennas))
            + 1j * rng.standard_normal((n_users, n_antennas))
        )
        try:
            return ChannelRealization.from_matrix(h)
        except RankDeficientChannel:
            continue
