"""Exhaustive symbol-vector enumeration, APPs and MAP detection."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import log_softmax

__all__ = [
    "SymbolBook",
    "AppVector",
    "qam4",
    "bpsk",
    "constellation_by_name",
    "enumerate_symbol_vectors",
    "app_matrix",
    "compute_app",
    "map_detect",
    "expected_symbol",
    "DEFAULT_K_CAP",
]

DEFAULT_K_CAP = 2**20

_SQRT_HALF = np.sqrt(0.5)


def qam4() -> tuple[np.ndarray, list[str]]:
    """Unit-energy 4-QAM, Gray labels counterclockwise from (1+1j)/sqrt(2)."""
    points = _SQRT_HALF * np.array([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j])
    return points, ["00", "01", "11", "10"]


def bpsk() -> tuple[np.ndarray, list[str]]:
    return np.array([1.0 + 0j, -1.0 + 0j]), ["0", "1"]


def constellation_by_name(name: str) -> tuple[np.ndarray, list[str]]:
    try:
        return {"4qam": qam4, "qpsk": qam4, "bpsk": bpsk}[name.lower()]()
    except KeyError:
        raise ValueError(f"unknown constellation {name!r}") from None


@dataclass(frozen=True)
class SymbolBook:
    """All ``K = |X|^n_tx`` candidate vectors, stored as rows of ``vectors``.

    Row ``k`` corresponds to constellation indices ``indices[k]``, ordered
    lexicographically with antenna 0 as the most significant digit.
    """

    constellation: np.ndarray
    n_tx: int
    vectors: np.ndarray  # (K, n_tx)
    indices: np.ndarray  # (K, n_tx) constellation index per antenna
    bit_labels: tuple[str, ...] = ()

    @property
    def size(self) -> int:
        return self.vectors.shape[0]

    @property
    def bits_per_symbol(self) -> float:
        return float(np.log2(len(self.constellation)))

    def labels(self, k: int) -> str:
        if not self.bit_labels:
            raise ValueError("book has no bit labels")
        return "".join(self.bit_labels[i] for i in self.indices[k])


def enumerate_symbol_vectors(
    constellation: Sequence[complex],
    n_tx: int,
    bit_labels: Optional[Sequence[str]] = None,
    k_cap: int = DEFAULT_K_CAP,
) -> SymbolBook:
    points = np.asarray(constellation, dtype=complex).reshape(-1)
    if points.size == 0:
        raise ValueError("constellation is empty")
    if n_tx < 1:
        raise ValueError("n_tx must be positive")
    k = points.size**n_tx
    if k > k_cap:
        raise ValueError(f"K = {k} exceeds the enumeration cap {k_cap}")
    indices = np.array(list(itertools.product(range(points.size), repeat=n_tx)), dtype=int)
    return SymbolBook(
        constellation=points,
        n_tx=n_tx,
        vectors=points[indices],
        indices=indices,
        bit_labels=tuple(bit_labels) if bit_labels is not None else (),
    )


@dataclass(frozen=True)
class AppVector:
    probs: np.ndarray
    slot: int = 0
    source_estimate: str = "pilot_estimate"


def app_matrix(ys: np.ndarray, h: np.ndarray, sigma2: float, vectors: np.ndarray) -> np.ndarray:
    """APPs for a block of received vectors.

    ``ys`` is N_rx x T (or a single length-N_rx vector); ``h`` is either one
    N_rx x N_tx matrix or a stack of them broadcast against the leading axis
    of the result. Returns T x K (or K) probabilities, normalized in the log
    domain so no row can underflow to all zeros.
    """
    if sigma2 <= 0:
        raise ValueError("sigma2 must be positive")
    single = np.ndim(ys) == 1
    ys = np.asarray(ys, dtype=complex)
    if single:
        ys = ys[:, None]
    centers = np.asarray(h) @ vectors.T  # (..., N_rx, K)
    diff = ys.T[..., :, :, None] - centers[..., None, :, :]  # (..., T, N_rx, K)
    dist = np.einsum("...trk,...trk->...tk", diff.real, diff.real) + np.einsum(
        "...trk,...trk->...tk", diff.imag, diff.imag
    )
    probs = np.exp(log_softmax(-dist / sigma2, axis=-1))
    return probs[..., 0, :] if single else probs


def compute_app(
    y: np.ndarray,
    h: np.ndarray,
    sigma2: float,
    book: SymbolBook,
    slot: int = 0,
    source_estimate: str = "pilot_estimate",
) -> AppVector:
    return AppVector(app_matrix(y, h, sigma2, book.vectors), slot, source_estimate)


def _probs(app) -> np.ndarray:
    return app.probs if isinstance(app, AppVector) else np.asarray(app)


def map_detect(app, book: Optional[SymbolBook] = None) -> tuple[int, Optional[np.ndarray]]:
    """Zero-based argmax index (lowest index wins ties) and its vector."""
    k = int(np.argmax(_probs(app)))
    return k, (book.vectors[k] if book is not None else None)


def expected_symbol(app, book: SymbolBook) -> np.ndarray:
    """APP-weighted mean of the candidate vectors (rows of probs allowed)."""
    return _probs(app) @ book.vectors
