"""Channel, pilot and signal generation for the flat-fading MIMO link.

All randomness flows through :class:`RngSpec`, a (master seed, stream id)
pair that maps onto an independent numpy ``SeedSequence`` substream. Two
identical specs always produce bit-identical draws.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "RngSpec",
    "FrameRealization",
    "complex_normal",
    "draw_channel",
    "evolve_channel",
    "build_pilot_matrix",
    "transmit",
    "generate_frame",
]


@dataclass(frozen=True)
class RngSpec:
    """Counter-style seed: one master seed, one substream per trial.

    ``purpose`` separates independent consumers inside the same trial
    (frame generation, policy sampling, ...) so that adding a consumer never
    shifts the draws of another.
    """

    master_seed: int
    stream_id: int = 0
    purpose: tuple[int, ...] = ()

    def child(self, *purpose: int) -> "RngSpec":
        return RngSpec(self.master_seed, self.stream_id, self.purpose + tuple(purpose))

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(
            self.master_seed, spawn_key=(self.stream_id,) + self.purpose
        )
        return np.random.Generator(np.random.PCG64(seq))


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngSpec):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def complex_normal(gen: np.random.Generator, shape, variance: float = 1.0) -> np.ndarray:
    """Circularly-symmetric CN(0, variance) samples, variance/2 per component."""
    scale = np.sqrt(variance / 2.0)
    return scale * (gen.standard_normal(shape) + 1j * gen.standard_normal(shape))


def draw_channel(n_rx: int, n_tx: int, rng) -> np.ndarray:
    """i.i.d. Rayleigh channel, entries CN(0, 1)."""
    if n_rx < 1 or n_tx < 1:
        raise ValueError("channel dimensions must be positive")
    return complex_normal(_as_generator(rng), (n_rx, n_tx))


def evolve_channel(h_prev: np.ndarray, epsilon: float, rng) -> np.ndarray:
    """One step of the first-order Gauss-Markov recursion.

    ``sqrt(1 - eps^2) * H_prev + eps * E`` with ``E`` i.i.d. CN(0, 1). The
    recursion keeps a unit-variance channel at unit variance.
    """
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")
    h_prev = np.asarray(h_prev, dtype=complex)
    if epsilon == 0.0:
        return h_prev.copy()
    innovation = complex_normal(_as_generator(rng), h_prev.shape)
    return np.sqrt(1.0 - epsilon**2) * h_prev + epsilon * innovation


def build_pilot_matrix(n_tx: int, t_p: int) -> np.ndarray:
    """Orthogonal unit-modulus pilots: the first ``n_tx`` rows of a T_p-point DFT.

    Satisfies ``P @ P^H = T_p * I`` and ``||p[n]||^2 = n_tx`` for every column.
    """
    if n_tx < 1:
        raise ValueError("n_tx must be positive")
    if t_p < n_tx:
        raise ValueError(f"t_p={t_p} < n_tx={n_tx} gives a rank-deficient pilot block")
    rows = np.arange(n_tx)[:, None]
    cols = np.arange(t_p)[None, :]
    return np.exp(-2j * np.pi * rows * cols / t_p)


def transmit(h: np.ndarray, x: np.ndarray, sigma2: float, rng) -> np.ndarray:
    """Received vector(s) ``y = H x + z`` with ``z ~ CN(0, sigma2 I)``.

    ``x`` may be a single vector or an ``n_tx x T`` block of columns.
    """
    if sigma2 < 0:
        raise ValueError("sigma2 must be nonnegative")
    h = np.asarray(h, dtype=complex)
    x = np.asarray(x, dtype=complex)
    clean = h @ x
    if sigma2 == 0:
        return clean
    return clean + complex_normal(_as_generator(rng), clean.shape, sigma2)


@dataclass
class FrameRealization:
    """One simulated frame.

    ``channels`` holds one N_rx x N_tx matrix per slot, indexed so that
    ``channels[t_p - 1 + n]`` is the channel at slot ``n`` (pilot slots are
    ``-t_p+1 .. 0``, data slots ``1 .. t_d``). Under block fading every entry
    is the same matrix. Data slot indices in ``tx_indices`` are zero-based
    positions in the symbol book.
    """

    channels: np.ndarray  # (t_p + t_d, n_rx, n_tx)
    pilot_matrix: np.ndarray  # (n_tx, t_p)
    pilot_observations: np.ndarray  # (n_rx, t_p)
    tx_indices: np.ndarray  # (t_d,)
    tx_symbols: np.ndarray  # (n_tx, t_d)
    data_observations: np.ndarray  # (n_rx, t_d)
    noise_variance: float
    t_u: int
    time_varying: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def t_p(self) -> int:
        return self.pilot_matrix.shape[1]

    @property
    def t_d(self) -> int:
        return self.data_observations.shape[1]

    @property
    def n_rx(self) -> int:
        return self.channels.shape[1]

    @property
    def n_tx(self) -> int:
        return self.channels.shape[2]

    def channel_at(self, n: int) -> np.ndarray:
        """Channel at slot ``n`` (``-t_p+1 <= n <= t_d``)."""
        return self.channels[self.t_p - 1 + n]

    @property
    def channel(self) -> np.ndarray:
        """The block channel (slot-1 channel when time-varying)."""
        return self.channel_at(1)

    def y(self, n: int) -> np.ndarray:
        """Received vector at data slot ``n`` (1-based)."""
        return self.data_observations[:, n - 1]


def generate_frame(
    n_tx: int,
    n_rx: int,
    t_p: int,
    t_u: int,
    sigma2: float,
    vectors: np.ndarray,
    rng,
    t_d: Optional[int] = None,
    epsilon: Optional[float] = None,
    evolve_during_pilots: bool = True,
) -> FrameRealization:
    """Draw a complete frame: channel(s), pilot block and data block.

    ``vectors`` is the K x n_tx array of candidate symbol vectors; data slots
    carry uniformly drawn indices into it. With ``epsilon`` set, the channel
    follows the Gauss-Markov recursion slot by slot, starting at the first
    pilot slot (or at data slot 1 when ``evolve_during_pilots`` is False).
    """
    t_d = t_u if t_d is None else t_d
    if not 0 < t_u <= t_d:
        raise ValueError(f"need 0 < t_u <= t_d, got t_u={t_u}, t_d={t_d}")
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    vectors = np.asarray(vectors, dtype=complex)
    if vectors.ndim != 2 or vectors.shape[1] != n_tx:
        raise ValueError("vectors must be K x n_tx")

    gen = _as_generator(rng)
    n_slots = t_p + t_d
    h0 = draw_channel(n_rx, n_tx, gen)
    if epsilon is None:
        channels = np.broadcast_to(h0, (n_slots, n_rx, n_tx)).copy()
    else:
        channels = np.empty((n_slots, n_rx, n_tx), dtype=complex)
        channels[0] = h0
        for i in range(1, n_slots):
            if not evolve_during_pilots and i < t_p:
                channels[i] = channels[i - 1]
            else:
                channels[i] = evolve_channel(channels[i - 1], epsilon, gen)

    pilots = build_pilot_matrix(n_tx, t_p)
    tx_indices = gen.integers(0, vectors.shape[0], size=t_d)
    tx_symbols = vectors[tx_indices].T
    noise = complex_normal(gen, (n_rx, n_slots), sigma2)
    # per-slot products so that time-varying channels are applied column-wise
    clean = np.einsum("trx,xt->rt", channels, np.concatenate([pilots, tx_symbols], axis=1))
    received = clean + noise
    return FrameRealization(
        channels=channels,
        pilot_matrix=pilots,
        pilot_observations=received[:, :t_p],
        tx_indices=tx_indices,
        tx_symbols=tx_symbols,
        data_observations=received[:, t_p:],
        noise_variance=float(sigma2),
        t_u=t_u,
        time_varying=epsilon is not None,
        meta={"epsilon": epsilon},
    )
