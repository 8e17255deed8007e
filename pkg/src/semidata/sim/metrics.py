"""Scalar link metrics."""
from __future__ import annotations

import numpy as np

__all__ = ["ebn0_to_sigma2", "nmse", "symbol_vector_errors"]


def ebn0_to_sigma2(ebn0_db: float, bits_per_symbol: float) -> float:
    """Noise variance for a per-bit SNR ``1 / (log2|X| * sigma2)``.

    ``bits_per_symbol`` is ``log2|X|`` (2 for 4-QAM, 1 for BPSK).
    """
    return 1.0 / (bits_per_symbol * 10.0 ** (ebn0_db / 10.0))


def nmse(h_hat: np.ndarray, h: np.ndarray) -> float:
    h = np.asarray(h)
    h_hat = np.asarray(h_hat)
    if h.shape != h_hat.shape:
        raise ValueError("shape mismatch")
    ref = np.sum(np.abs(h) ** 2)
    if ref == 0:
        raise ValueError("reference channel is zero")
    return float(np.sum(np.abs(h_hat - h) ** 2) / ref)


def symbol_vector_errors(detected, sent) -> int:
    return int(np.count_nonzero(np.asarray(detected) != np.asarray(sent)))
