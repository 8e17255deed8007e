"""Per-frame semi-data-aided estimation driver and re-detection."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..core import FrameRealization, RngSpec, _as_generator
from ..detector import SymbolBook, app_matrix
from .policy import FrameContext, PolicyParams, low_complexity_policy, optimal_policy
from .state import MdpState, apply_action, init_state

__all__ = ["SlotRecord", "SelectionOutcome", "run_selection", "redetect_unselected"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SlotRecord:
    slot: int
    detected_index: int
    detected_app: float
    rollout_action: int
    score: float
    action: int
    gram_recomputed: bool

    def as_dict(self) -> dict:
        return {
            "slot": self.slot,
            "detected_index": self.detected_index,
            "detected_app": self.detected_app,
            "rollout_action": self.rollout_action,
            "score": self.score,
            "action": self.action,
            "gram_recomputed": int(self.gram_recomputed),
        }


@dataclass
class SelectionOutcome:
    final_estimate: np.ndarray
    selection_mask: np.ndarray
    initial_detections: np.ndarray
    final_state: MdpState
    per_slot_trace: list = field(default_factory=list)
    redetected_indices: list = field(default_factory=list)

    @property
    def selected_slots(self) -> np.ndarray:
        return np.flatnonzero(self.selection_mask) + 1

    @property
    def unselected_slots(self) -> np.ndarray:
        return np.flatnonzero(self.selection_mask == 0) + 1


def run_selection(
    frame: FrameRealization,
    book: SymbolBook,
    params: PolicyParams,
    rng=None,
    trace: bool = False,
    ctx: Optional[FrameContext] = None,
) -> SelectionOutcome:
    """Walk slots ``1 .. T_u``, decide keep/skip for each detected vector.

    Detection uses the pilot-only estimate. The policy kind in ``params``
    picks the exact (all tree sequences) or sampled decision rule; ``rng``
    only matters for the sampled one.
    """
    if ctx is None:
        ctx = FrameContext(frame, book, params.rollout_threshold)
    elif ctx.rollout_threshold != params.rollout_threshold:
        ctx.set_rollout_threshold(params.rollout_threshold)
    gen = _as_generator(rng if rng is not None else 0)
    state = init_state(frame.pilot_matrix, frame.noise_variance, frame.pilot_observations)
    records = []
    for n in range(1, ctx.t_u + 1):
        if params.policy_kind == "optimal":
            action, score = optimal_policy(state, ctx, params, n)
        else:
            action, score = low_complexity_policy(state, ctx, params, gen, n)
        n_events = len(state.recompute_events)
        state = apply_action(state, action, ctx.x_hat[n - 1], ctx.ys[:, n - 1])
        if trace:
            records.append(
                SlotRecord(
                    slot=n,
                    detected_index=int(ctx.k_hat[n - 1]),
                    detected_app=float(ctx.reliability[n - 1]),
                    rollout_action=int(ctx.rollout[n - 1]),
                    score=score,
                    action=action,
                    gram_recomputed=len(state.recompute_events) > n_events,
                )
            )
    if state.recompute_events:
        log.debug("gram inverse re-factorized at slots %s", state.recompute_events)
    return SelectionOutcome(
        final_estimate=state.estimate(),
        selection_mask=np.array(state.action_history, dtype=int),
        initial_detections=ctx.k_hat.copy(),
        final_state=state,
        per_slot_trace=records,
    )


def redetect_unselected(
    outcome: SelectionOutcome,
    frame: FrameRealization,
    book: SymbolBook,
    h_final: Optional[np.ndarray] = None,
) -> np.ndarray:
    """MAP re-detection of unselected slots with the updated estimate.

    Returns zero-based indices for slots ``1 .. T_u``; selected slots keep
    their original decisions. Also stores the touched slots on ``outcome``.
    """
    h_final = outcome.final_estimate if h_final is None else h_final
    detections = outcome.initial_detections.copy()
    slots = outcome.unselected_slots
    outcome.redetected_indices = list(int(s) for s in slots)
    if slots.size == 0:
        return detections
    apps = app_matrix(frame.data_observations[:, slots - 1], h_final, frame.noise_variance, book.vectors)
    detections[slots - 1] = np.argmax(apps, axis=1)
    return detections
