"""MDP state for sequential virtual-pilot selection."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..estimator import hermitian_inverse, lmmse_from_blocks, rank_one_update_inverse

__all__ = ["MdpState", "init_state", "apply_action", "GRAM_TOL"]

GRAM_TOL = 1e-8


@dataclass(frozen=True)
class MdpState:
    """State at the start of slot ``cursor``.

    ``x_true_side`` and ``x_detected_side`` both start with the pilot matrix
    and grow by one column for every selected slot; ``observations`` grows in
    step with them. ``gram_inverse`` is ``(X_hat X_hat^H + s2 I)^-1``, kept
    current with rank-one updates and re-factorized every
    ``refactor_interval`` updates.
    """

    x_true_side: np.ndarray
    x_detected_side: np.ndarray
    observations: np.ndarray
    action_history: tuple[int, ...]
    gram_inverse: np.ndarray
    sigma2: float
    cursor: int = 1
    refactor_interval: int = 64
    updates_since_refactor: int = 0
    recompute_events: tuple[int, ...] = field(default=())

    @property
    def n_tx(self) -> int:
        return self.x_detected_side.shape[0]

    @property
    def n_selected(self) -> int:
        return sum(self.action_history)

    @property
    def gram(self) -> np.ndarray:
        """``X_hat X_hat^H`` without the noise loading."""
        x = self.x_detected_side
        return x @ x.conj().T

    @property
    def mismatch(self) -> np.ndarray:
        """``X_hat (X_hat - X)^H``, zero whenever both sides agree."""
        x = self.x_detected_side
        return x @ (x - self.x_true_side).conj().T

    @property
    def y_x_hat(self) -> np.ndarray:
        """``Y X_hat^H``, the cross-correlation feeding the estimate."""
        return self.observations @ self.x_detected_side.conj().T

    def estimate(self) -> np.ndarray:
        return lmmse_from_blocks(self.observations, self.x_detected_side, self.sigma2)

    def direct_gram_inverse(self) -> np.ndarray:
        return hermitian_inverse(self.gram + self.sigma2 * np.eye(self.n_tx))


def init_state(p: np.ndarray, sigma2: float, y_p: np.ndarray | None = None, refactor_interval: int = 64) -> MdpState:
    """``S_1 = (P, P, [])``; ``y_p`` may be omitted when no estimate is needed."""
    p = np.asarray(p, dtype=complex)
    if y_p is None:
        y_p = np.zeros((1, p.shape[1]), dtype=complex)
    y_p = np.asarray(y_p, dtype=complex)
    q = hermitian_inverse(p @ p.conj().T + sigma2 * np.eye(p.shape[0]))
    return MdpState(
        x_true_side=p.copy(),
        x_detected_side=p.copy(),
        observations=y_p.copy(),
        action_history=(),
        gram_inverse=q,
        sigma2=float(sigma2),
        refactor_interval=refactor_interval,
    )


def apply_action(
    state: MdpState,
    action: int,
    x_hat: np.ndarray,
    y_n: np.ndarray,
    x_true: np.ndarray | None = None,
) -> MdpState:
    """Receiver-side transition.

    With ``action == 1`` the detected vector is appended to the detected side
    and, since the detection is taken as correct, also to the true side
    (pass ``x_true`` to override for diagnostics). ``action == 0`` only
    extends the history.
    """
    if action not in (0, 1):
        raise ValueError(f"action must be 0 or 1, got {action}")
    history = state.action_history + (int(action),)
    if action == 0:
        return replace(state, action_history=history, cursor=state.cursor + 1)

    x_hat = np.asarray(x_hat, dtype=complex).reshape(-1)
    x_true = x_hat if x_true is None else np.asarray(x_true, dtype=complex).reshape(-1)
    x_det = np.column_stack([state.x_detected_side, x_hat])
    x_tru = np.column_stack([state.x_true_side, x_true])
    obs = np.column_stack([state.observations, np.asarray(y_n, dtype=complex).reshape(-1)])

    q = rank_one_update_inverse(state.gram_inverse, x_hat)
    updates = state.updates_since_refactor + 1
    events = state.recompute_events
    gram = x_det @ x_det.conj().T + state.sigma2 * np.eye(state.n_tx)
    drift = np.max(np.abs(q @ gram - np.eye(state.n_tx)))
    if updates >= state.refactor_interval or drift > GRAM_TOL:
        q = hermitian_inverse(gram)
        updates = 0
        events = events + (state.cursor,)
    return replace(
        state,
        x_true_side=x_tru,
        x_detected_side=x_det,
        observations=obs,
        action_history=history,
        gram_inverse=q,
        cursor=state.cursor + 1,
        updates_since_refactor=updates,
        recompute_events=events,
    )
