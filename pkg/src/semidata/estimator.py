"""LMMSE channel estimation with pilots and virtual pilots.

The estimate for a regressor block ``X`` (N_tx x m) and observation block
``Y`` (N_rx x m) is ``Y X^H (X X^H + sigma2 I)^-1``. Pilot-only estimation is
the special case ``X = P``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

__all__ = [
    "ChannelEstimate",
    "AugmentedBlocks",
    "real_trace",
    "lmmse_from_blocks",
    "lmmse_pilot_estimate",
    "lmmse_pilot_mse",
    "lmmse_augmented_estimate",
    "error_covariance",
    "rank_one_update_inverse",
    "hermitian_inverse",
]

IMAG_TOL = 1e-9


@dataclass(frozen=True)
class ChannelEstimate:
    matrix: np.ndarray
    source: str  # "pilot_only" | "augmented"
    pilot_count_effective: int


@dataclass(frozen=True)
class AugmentedBlocks:
    """Observations ``[Y_p, y...]`` and regressors ``[P, x...]`` side by side."""

    observations: np.ndarray
    regressors: np.ndarray
    noise_variance: float

    def __post_init__(self):
        if self.observations.shape[1] != self.regressors.shape[1]:
            raise ValueError(
                "observations and regressors must have equal column counts "
                f"({self.observations.shape[1]} != {self.regressors.shape[1]})"
            )


def real_trace(m: np.ndarray) -> float:
    """Trace of a matrix that is Hermitian in exact arithmetic."""
    tr = np.trace(m)
    if abs(tr.imag) > IMAG_TOL * max(abs(tr.real), 1.0):
        raise ArithmeticError(f"trace has non-negligible imaginary part: {tr}")
    return float(tr.real)


def _check_sigma2(sigma2: float) -> None:
    if not sigma2 > 0:
        raise ValueError(f"sigma2 must be positive, got {sigma2}")


def hermitian_inverse(g: np.ndarray) -> np.ndarray:
    """Inverse of a Hermitian PD matrix via Cholesky, symmetrized."""
    c = linalg.cho_factor(g, lower=True)
    inv = linalg.cho_solve(c, np.eye(g.shape[0], dtype=g.dtype))
    return 0.5 * (inv + inv.conj().T)


def lmmse_from_blocks(y: np.ndarray, x: np.ndarray, sigma2: float) -> np.ndarray:
    """``Y X^H (X X^H + sigma2 I)^-1`` solved through a Cholesky factor."""
    gram = x @ x.conj().T + sigma2 * np.eye(x.shape[0])
    # H G = Y X^H  <=>  G H^H = X Y^H   (G Hermitian)
    rhs = x @ y.conj().T
    return linalg.cho_solve(linalg.cho_factor(gram, lower=True), rhs).conj().T


def lmmse_pilot_estimate(y_p: np.ndarray, p: np.ndarray, sigma2: float) -> ChannelEstimate:
    _check_sigma2(sigma2)
    y_p = np.asarray(y_p, dtype=complex)
    p = np.asarray(p, dtype=complex)
    if y_p.shape[1] != p.shape[1]:
        raise ValueError("pilot observations and pilot matrix disagree in length")
    return ChannelEstimate(lmmse_from_blocks(y_p, p, sigma2), "pilot_only", p.shape[1])


def lmmse_pilot_mse(p: np.ndarray, sigma2: float, n_rx: int) -> float:
    """Expected ``||H_hat - H||_F^2`` for a CN(0,1) channel."""
    _check_sigma2(sigma2)
    p = np.asarray(p, dtype=complex)
    q = hermitian_inverse(p @ p.conj().T + sigma2 * np.eye(p.shape[0]))
    return n_rx * sigma2 * real_trace(q)


def lmmse_augmented_estimate(blocks: AugmentedBlocks) -> ChannelEstimate:
    _check_sigma2(blocks.noise_variance)
    matrix = lmmse_from_blocks(
        np.asarray(blocks.observations, dtype=complex),
        np.asarray(blocks.regressors, dtype=complex),
        blocks.noise_variance,
    )
    return ChannelEstimate(matrix, "augmented", blocks.regressors.shape[1])


def error_covariance(x_true: np.ndarray, x_hat: np.ndarray, sigma2: float) -> np.ndarray:
    """Per-receive-antenna error covariance of the LMMSE estimate.

    The estimate uses regressors ``x_hat`` while the data were actually sent
    as ``x_true``. With ``Q = (X_hat X_hat^H + s2 I)^-1`` and
    ``D = X_hat (X_hat - X)^H + s2 I`` the covariance is
    ``s2 Q - s2^2 Q^2 + Q D D^H Q``.
    """
    _check_sigma2(sigma2)
    x_true = np.asarray(x_true, dtype=complex)
    x_hat = np.asarray(x_hat, dtype=complex)
    if x_true.shape != x_hat.shape:
        raise ValueError(f"shape mismatch {x_true.shape} vs {x_hat.shape}")
    eye = np.eye(x_hat.shape[0])
    q = hermitian_inverse(x_hat @ x_hat.conj().T + sigma2 * eye)
    d = x_hat @ (x_hat - x_true).conj().T + sigma2 * eye
    qd = q @ d
    cov = sigma2 * q - sigma2**2 * (q @ q) + qd @ qd.conj().T
    return 0.5 * (cov + cov.conj().T)


def rank_one_update_inverse(q: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``(Q^-1 + x x^H)^-1`` from ``Q`` by the matrix inversion lemma."""
    x = np.asarray(x, dtype=complex).reshape(-1)
    qx = q @ x
    denom = 1.0 + np.real(np.vdot(x, qx))
    out = q - np.outer(qx, qx.conj()) / denom
    return 0.5 * (out + out.conj().T)
