"""Closed-form one-step MSE gain of selecting the current detected vector.

For a future action sequence ``a`` the gain is the drop in the trace of the
per-antenna error covariance when slot ``n`` is appended on top of the
virtual state reached by ``a``. It collapses to

    ||t||^2 * (s2 + s2^2 (||t||^2 - 2 beta) + ||v||^2 - ||e - u + v||^2)

with every auxiliary vector built from ``Q`` and ``D`` of the ``[0, a]``
virtual state. :func:`delta_batch` evaluates many sequences at once.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .state import MdpState

__all__ = ["DeltaWorkspace", "delta_batch", "delta_workspace", "delta_n", "selected_sums"]


@dataclass(frozen=True)
class DeltaWorkspace:
    q: np.ndarray
    d: np.ndarray
    t: np.ndarray
    e: np.ndarray
    u: np.ndarray
    v: np.ndarray
    alpha: float
    beta: float


def _herm(m: np.ndarray) -> np.ndarray:
    return np.swapaxes(m, -1, -2).conj()


def selected_sums(a, future_hat: np.ndarray, future_tilde: np.ndarray):
    """``sum x_hat x_hat^H`` and ``sum x_hat (x_hat - x_tilde)^H`` over a-selected columns.

    ``future_hat`` / ``future_tilde`` are (len(a), n_tx) row stacks.
    """
    a = np.asarray(a, dtype=bool).reshape(-1)
    fh = np.asarray(future_hat, dtype=complex).reshape(len(a), -1)[a]
    ft = np.asarray(future_tilde, dtype=complex).reshape(len(a), -1)[a]
    gram = fh.T @ fh.conj()
    cross = fh.T @ (fh - ft).conj()
    return gram, cross


def _workspace_arrays(gram0, mismatch0, x_hat_n, x_tilde_n, sigma2):
    n_tx = gram0.shape[-1]
    eye = np.eye(n_tx)
    q = np.linalg.inv(gram0 + sigma2 * eye)
    q = 0.5 * (q + _herm(q))
    d = mismatch0 + sigma2 * eye
    qx = q @ x_hat_n  # (..., n_tx)
    alpha = np.real(np.einsum("i,...i->...", x_hat_n.conj(), qx))
    scale = 1.0 / np.sqrt(1.0 + alpha)
    t = qx * scale[..., None]
    e = (x_hat_n - x_tilde_n) * scale[..., None]
    dh = _herm(d)
    u = np.einsum("...ij,...j->...i", dh, t)
    qt = np.einsum("...ij,...j->...i", q, t)
    t2 = np.real(np.einsum("...i,...i->...", t.conj(), t))
    safe = np.where(t2 > 0, t2, 1.0)
    v = np.einsum("...ij,...j->...i", dh, qt) / safe[..., None]
    beta = np.real(np.einsum("...i,...i->...", t.conj(), qt)) / safe
    return q, d, t, e, u, v, alpha, beta, t2


def delta_batch(
    gram0: np.ndarray,
    mismatch0: np.ndarray,
    x_hat_n: np.ndarray,
    x_tilde_n: np.ndarray,
    sigma2: float,
) -> np.ndarray:
    """Vectorized gain over a leading batch axis.

    ``gram0`` and ``mismatch0`` are ``X_hat X_hat^H`` and
    ``X_hat (X_hat - X)^H`` of the ``[0, a]`` virtual state (no noise
    loading), shape (B, n_tx, n_tx); ``x_tilde_n`` is (B, n_tx) or (n_tx,).
    """
    x_hat_n = np.asarray(x_hat_n, dtype=complex)
    _, _, _, e, u, v, _, beta, t2 = _workspace_arrays(gram0, mismatch0, x_hat_n, x_tilde_n, sigma2)
    w = e - u + v
    v2 = np.real(np.einsum("...i,...i->...", v.conj(), v))
    w2 = np.real(np.einsum("...i,...i->...", w.conj(), w))
    out = t2 * (sigma2 + sigma2**2 * (t2 - 2.0 * beta) + v2 - w2)
    return np.where(t2 > 0, out, 0.0)


def delta_workspace(state: MdpState, a, x_hat_n, x_tilde_n, future_hat, future_tilde) -> DeltaWorkspace:
    gram_sel, cross_sel = selected_sums(a, future_hat, future_tilde) if len(a) else (0.0, 0.0)
    q, d, t, e, u, v, alpha, beta, _ = _workspace_arrays(
        state.gram + gram_sel,
        state.mismatch + cross_sel,
        np.asarray(x_hat_n, dtype=complex),
        np.asarray(x_tilde_n, dtype=complex),
        state.sigma2,
    )
    return DeltaWorkspace(q, d, t, e, u, v, float(alpha), float(beta))


def delta_n(state: MdpState, a, x_hat_n, x_tilde_n, future_hat=(), future_tilde=(), sigma2=None) -> float:
    """Gain of selecting slot ``n`` given the future sequence ``a``.

    ``future_hat[l]`` / ``future_tilde[l]`` are the detected and expected
    vectors of the slot that ``a[l]`` refers to. A zero ``x_hat_n`` yields 0.
    """
    sigma2 = state.sigma2 if sigma2 is None else sigma2
    a = np.asarray(a, dtype=int).reshape(-1)
    if len(a):
        gram_sel, cross_sel = selected_sums(a, future_hat, future_tilde)
    else:
        gram_sel = cross_sel = np.zeros((state.n_tx, state.n_tx), dtype=complex)
    out = delta_batch(
        (state.gram + gram_sel)[None],
        (state.mismatch + cross_sel)[None],
        x_hat_n,
        np.asarray(x_tilde_n, dtype=complex)[None],
        sigma2,
    )
    return float(out[0])
