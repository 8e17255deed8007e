"""Tree/rollout lookahead policies for the selection MDP.

Near-future slots ``n+1 .. n+N`` follow a stochastic tree policy that keeps a
slot with probability equal to its detection APP; later slots follow a
deterministic threshold rollout. The exact policy averages the closed-form
gain over all ``2^N`` tree sequences; the low-complexity policy averages it
over ``n_sample`` drawn sequences.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..core import FrameRealization, RngSpec, _as_generator
from ..detector import SymbolBook, app_matrix
from ..estimator import lmmse_pilot_estimate
from .delta import delta_batch
from .state import MdpState

__all__ = [
    "PolicyParams",
    "FrameContext",
    "SlotEvaluation",
    "rollout_actions",
    "sample_tree_actions",
    "tree_weight",
    "all_tree_sequences",
    "tree_refined_apps",
    "evaluate_sequences",
    "optimal_policy",
    "low_complexity_policy",
]


@dataclass(frozen=True)
class PolicyParams:
    tree_depth: int = 8
    n_sample: int = 10
    rollout_threshold: float = 0.5
    gamma: float = 1.0
    policy_kind: str = "low_complexity"

    def __post_init__(self):
        if self.tree_depth < 0:
            raise ValueError("tree_depth must be >= 0")
        if self.n_sample < 1:
            raise ValueError("n_sample must be >= 1")
        if not 0.0 <= self.rollout_threshold <= 1.0:
            raise ValueError("rollout_threshold must lie in [0, 1]")
        if self.gamma != 1.0:
            # the closed-form policy is only derived for undiscounted rewards
            raise ValueError("only gamma = 1 is supported")
        if self.policy_kind not in ("optimal", "low_complexity"):
            raise ValueError(f"unknown policy_kind {self.policy_kind!r}")


class FrameContext:
    """Receiver-side quantities fixed for a whole frame.

    Everything here comes from the pilot-only estimate: initial APPs, MAP
    detections, their reliabilities, the initial expected vectors, and the
    rollout decisions with their suffix sums. Slots are 1-based throughout;
    array row ``m - 1`` holds slot ``m``.
    """

    def __init__(self, frame: FrameRealization, book: SymbolBook, rollout_threshold: float = 0.5):
        self.frame = frame
        self.book = book
        self.sigma2 = frame.noise_variance
        self.t_u = frame.t_u
        self.n_tx = frame.n_tx
        self.vectors = book.vectors
        self.ys = frame.data_observations[:, : self.t_u]
        self.h_pilot = lmmse_pilot_estimate(frame.pilot_observations, frame.pilot_matrix, self.sigma2).matrix
        self.apps = app_matrix(self.ys, self.h_pilot, self.sigma2, self.vectors)  # (T_u, K)
        self.k_hat = np.argmax(self.apps, axis=1)
        self.x_hat = self.vectors[self.k_hat]  # (T_u, n_tx)
        self.reliability = self.apps[np.arange(self.t_u), self.k_hat]
        self.x_tilde = self.apps @ self.vectors
        self.set_rollout_threshold(rollout_threshold)

    def set_rollout_threshold(self, eta: float) -> None:
        self.rollout_threshold = eta
        self.rollout = rollout_actions(self.reliability, eta)
        r = self.rollout.astype(float)[:, None, None]
        gram = r * np.einsum("ti,tj->tij", self.x_hat, self.x_hat.conj())
        cross = r * np.einsum("ti,tj->tij", self.x_hat, (self.x_hat - self.x_tilde).conj())
        # suffix[m - 1] = sum over rollout-kept slots m..T_u; suffix[T_u] = 0
        zero = np.zeros((1, self.n_tx, self.n_tx), dtype=complex)
        self._suffix_gram = np.concatenate([np.cumsum(gram[::-1], axis=0)[::-1], zero])
        self._suffix_cross = np.concatenate([np.cumsum(cross[::-1], axis=0)[::-1], zero])

    def rollout_sums(self, first_slot: int):
        """Rollout contributions of slots ``first_slot .. T_u``."""
        i = min(first_slot - 1, self.t_u)
        return self._suffix_gram[i], self._suffix_cross[i]

    def horizon(self, n: int, depth: int) -> int:
        return max(0, min(depth, self.t_u - n))

    def rollout_tail(self, n: int, depth: int) -> np.ndarray:
        """Rollout actions for slots ``n + N_eff + 1 .. T_u``."""
        return self.rollout[n + self.horizon(n, depth):]


def rollout_actions(apps, eta_roll: float) -> np.ndarray:
    """Keep a slot iff its detection APP is at least ``eta_roll``."""
    if not 0.0 <= eta_roll <= 1.0:
        raise ValueError("eta_roll must lie in [0, 1]")
    return (np.asarray(apps, dtype=float) >= eta_roll).astype(int)


def sample_tree_actions(apps, rng, size: Optional[int] = None) -> np.ndarray:
    """Independent Bernoulli(APP) draws, one per slot (``size`` rows if given)."""
    apps = np.asarray(apps, dtype=float)
    gen = _as_generator(rng)
    shape = apps.shape if size is None else (size,) + apps.shape
    return (gen.random(shape) < apps).astype(int)


def tree_weight(a, apps) -> float:
    """Probability of the tree policy producing ``a``."""
    a = np.asarray(a, dtype=int)
    apps = np.asarray(apps, dtype=float)
    if a.shape[-1] != apps.shape[-1]:
        raise ValueError("action sequence and APP list differ in length")
    return np.prod(np.where(a == 1, apps, 1.0 - apps), axis=-1)


def all_tree_sequences(depth: int) -> np.ndarray:
    """All ``2^depth`` binary sequences, shape (2^depth, depth)."""
    return np.array(list(itertools.product((0, 1), repeat=depth)), dtype=int).reshape(2**depth, depth)


def _refined_estimates(state: MdpState, ctx: FrameContext, n: int, seqs: np.ndarray) -> np.ndarray:
    """Channel estimates after virtually appending tree-selected slots.

    The appended regressors are the initial expected vectors of the selected
    slots ``n+1 .. n+N_eff``; returns (B, N_rx, n_tx).
    """
    depth = seqs.shape[1]
    sigma2 = ctx.sigma2
    eye = np.eye(ctx.n_tx)
    slots = np.arange(n, n + depth)  # zero-based rows of slots n+1..n+depth
    xt = ctx.x_tilde[slots]
    ys = ctx.ys[:, slots]
    w = seqs.astype(float)
    gram = state.gram + sigma2 * eye + np.einsum("bl,li,lj->bij", w, xt, xt.conj())
    yx = state.y_x_hat + np.einsum("bl,rl,lj->brj", w, ys, xt.conj())
    return yx @ np.linalg.inv(gram)


def tree_refined_apps(state: MdpState, a_t, ctx: FrameContext, n: Optional[int] = None) -> np.ndarray:
    """APPs of slots ``n .. n+N_eff`` under the estimate refined by ``a_t``.

    Returns (N_eff + 1, K); row 0 is slot ``n`` itself.
    """
    n = state.cursor if n is None else n
    seqs = np.asarray(a_t, dtype=int).reshape(1, -1)
    h = _refined_estimates(state, ctx, n, seqs)
    ys = ctx.ys[:, n - 1 : n + seqs.shape[1]]
    return app_matrix(ys, h, ctx.sigma2, ctx.vectors)[0]


@dataclass(frozen=True)
class SlotEvaluation:
    sequences: np.ndarray  # (B, N_eff)
    deltas: np.ndarray  # (B,)
    weights: np.ndarray  # (B,)
    x_tilde: np.ndarray  # (B, N_eff + 1, n_tx) refined expected vectors, slots n..n+N_eff


def evaluate_sequences(state: MdpState, ctx: FrameContext, n: int, seqs: np.ndarray) -> SlotEvaluation:
    """Gain of selecting slot ``n`` for each tree sequence in ``seqs``.

    Each sequence is completed with the rollout actions of the remaining
    slots; tree-selected slots contribute their refined expected vectors,
    rollout slots their initial ones.
    """
    seqs = np.asarray(seqs, dtype=int)
    depth = seqs.shape[1]
    sigma2 = ctx.sigma2
    h = _refined_estimates(state, ctx, n, seqs)
    ys = ctx.ys[:, n - 1 : n + depth]
    refined = app_matrix(ys, h, sigma2, ctx.vectors)  # (B, depth + 1, K)
    x_tilde = refined @ ctx.vectors  # (B, depth + 1, n_tx)

    future = np.arange(n, n + depth)
    xh = ctx.x_hat[future]  # (depth, n_tx)
    w = seqs.astype(float)
    roll_gram, roll_cross = ctx.rollout_sums(n + depth + 1)
    gram0 = state.gram + roll_gram + np.einsum("bl,li,lj->bij", w, xh, xh.conj())
    cross0 = (
        state.mismatch
        + roll_cross
        + np.einsum("bl,li,blj->bij", w, xh, (xh[None] - x_tilde[:, 1:]).conj())
    )
    deltas = delta_batch(gram0, cross0, ctx.x_hat[n - 1], x_tilde[:, 0], sigma2)
    weights = tree_weight(seqs, ctx.reliability[future]) if depth else np.ones(len(seqs))
    return SlotEvaluation(seqs, deltas, weights, x_tilde)


def optimal_policy(state: MdpState, ctx: FrameContext, params: PolicyParams, n: Optional[int] = None):
    """Exact lookahead decision; returns ``(action, weighted_gain)``."""
    n = state.cursor if n is None else n
    depth = ctx.horizon(n, params.tree_depth)
    ev = evaluate_sequences(state, ctx, n, all_tree_sequences(depth))
    score = float(np.dot(ev.weights, ev.deltas))
    return int(score >= 0.0), score


def low_complexity_policy(state: MdpState, ctx: FrameContext, params: PolicyParams, rng, n: Optional[int] = None):
    """Sampled lookahead decision; returns ``(action, empirical_mean_gain)``."""
    n = state.cursor if n is None else n
    depth = ctx.horizon(n, params.tree_depth)
    seqs = sample_tree_actions(ctx.reliability[n : n + depth], rng, size=params.n_sample)
    ev = evaluate_sequences(state, ctx, n, seqs)
    mean = 0.0
    for s, d in enumerate(ev.deltas, start=1):
        mean = (s - 1) / s * mean + d / s
    return int(mean >= 0.0), float(mean)
