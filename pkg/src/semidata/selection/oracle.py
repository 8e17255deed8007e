"""Brute-force references for the closed-form gain and the lookahead policy.

These build the virtual states column by column and evaluate error
covariance traces directly. They share no code path with the batched
closed form beyond the detector and the estimator primitives.
"""
from __future__ import annotations

import numpy as np

from ..detector import compute_app, expected_symbol
from ..estimator import AugmentedBlocks, error_covariance, lmmse_augmented_estimate, real_trace
from .policy import FrameContext, PolicyParams, all_tree_sequences
from .state import MdpState

__all__ = ["oracle_delta_n", "virtual_state_trace", "oracle_refined_tilde", "oracle_q_value", "ORACLE_MAX_DEPTH"]

ORACLE_MAX_DEPTH = 12


def _columns(rows) -> np.ndarray:
    rows = [np.asarray(r, dtype=complex).reshape(-1) for r in rows]
    return np.array(rows).T if rows else None


def virtual_state_trace(state: MdpState, first, x_hat_n, x_tilde_n, a, future_hat, future_tilde, sigma2) -> float:
    """Trace of the error covariance after appending ``[first, a]``.

    ``first`` decides whether slot ``n`` itself (``x_hat_n`` detected,
    ``x_tilde_n`` assumed sent) is appended.
    """
    det = [state.x_detected_side]
    tru = [state.x_true_side]
    if first:
        det.append(np.asarray(x_hat_n, dtype=complex).reshape(-1, 1))
        tru.append(np.asarray(x_tilde_n, dtype=complex).reshape(-1, 1))
    picked = [l for l, bit in enumerate(a) if bit]
    if picked:
        det.append(_columns([future_hat[l] for l in picked]))
        tru.append(_columns([future_tilde[l] for l in picked]))
    return real_trace(error_covariance(np.hstack(tru), np.hstack(det), sigma2))


def oracle_delta_n(state: MdpState, a, x_hat_n, x_tilde_n, future_hat=(), future_tilde=(), sigma2=None) -> float:
    """``Tr C_e([0, a]) - Tr C_e([1, a])`` evaluated from full covariances."""
    sigma2 = state.sigma2 if sigma2 is None else sigma2
    a = list(np.asarray(a, dtype=int).reshape(-1))
    if not np.any(np.asarray(x_hat_n)):
        return 0.0
    without = virtual_state_trace(state, 0, x_hat_n, x_tilde_n, a, future_hat, future_tilde, sigma2)
    with_n = virtual_state_trace(state, 1, x_hat_n, x_tilde_n, a, future_hat, future_tilde, sigma2)
    return without - with_n


def oracle_refined_tilde(state: MdpState, ctx: FrameContext, n: int, a_t) -> np.ndarray:
    """Expected vectors of slots ``n .. n+len(a_t)`` under the tree-refined estimate.

    Built one sequence at a time with the plain augmented LMMSE estimator.
    """
    obs = [state.observations]
    reg = [state.x_detected_side]
    for l, bit in enumerate(a_t, start=1):
        if bit:
            obs.append(ctx.ys[:, n + l - 1 : n + l])
            reg.append(ctx.x_tilde[n + l - 1].reshape(-1, 1))
    h = lmmse_augmented_estimate(AugmentedBlocks(np.hstack(obs), np.hstack(reg), ctx.sigma2)).matrix
    out = []
    for m in range(n, n + len(a_t) + 1):
        app = compute_app(ctx.ys[:, m - 1], h, ctx.sigma2, ctx.book, slot=m, source_estimate="tree_refined")
        out.append(expected_symbol(app, ctx.book))
    return np.array(out)


def oracle_q_value(state: MdpState, action: int, ctx: FrameContext, params: PolicyParams, n=None) -> float:
    """Q-value of ``action`` at ``state`` under the tree/rollout model (gamma = 1).

    ``Tr C_e(S) - sum_t w(t) Tr C_e(U~(S | [action, t, rollout]))``.
    """
    if params.gamma != 1.0:
        raise ValueError("oracle is defined for gamma = 1 only")
    n = state.cursor if n is None else n
    depth = ctx.horizon(n, params.tree_depth)
    if depth > ORACLE_MAX_DEPTH:
        raise ValueError(f"oracle depth {depth} exceeds {ORACLE_MAX_DEPTH}")
    sigma2 = ctx.sigma2
    base = real_trace(error_covariance(state.x_true_side, state.x_detected_side, sigma2))

    rollout = list(ctx.rollout_tail(n, params.tree_depth))
    roll_slots = range(n + depth + 1, ctx.t_u + 1)
    future_hat = [ctx.x_hat[m - 1] for m in range(n + 1, ctx.t_u + 1)]
    rel = ctx.reliability

    expected = 0.0
    for a_t in all_tree_sequences(depth):
        weight = 1.0
        for l, bit in enumerate(a_t, start=1):
            p = rel[n + l - 1]
            weight *= p if bit else 1.0 - p
        tilde = oracle_refined_tilde(state, ctx, n, a_t)
        future_tilde = list(tilde[1:]) + [ctx.x_tilde[m - 1] for m in roll_slots]
        seq = list(a_t) + rollout
        tr = virtual_state_trace(state, action, ctx.x_hat[n - 1], tilde[0], seq, future_hat, future_tilde, sigma2)
        expected += weight * tr
    return base - expected
