"""Sequential virtual-pilot selection: MDP state, closed-form gain, policies."""
from .algorithm import SelectionOutcome, SlotRecord, redetect_unselected, run_selection
from .delta import DeltaWorkspace, delta_batch, delta_n, delta_workspace
from .oracle import oracle_delta_n, oracle_q_value
from .policy import (
    FrameContext,
    PolicyParams,
    all_tree_sequences,
    evaluate_sequences,
    low_complexity_policy,
    optimal_policy,
    rollout_actions,
    sample_tree_actions,
    tree_refined_apps,
    tree_weight,
)
from .state import MdpState, apply_action, init_state

__all__ = [
    "DeltaWorkspace",
    "FrameContext",
    "MdpState",
    "PolicyParams",
    "SelectionOutcome",
    "SlotRecord",
    "all_tree_sequences",
    "apply_action",
    "delta_batch",
    "delta_n",
    "delta_workspace",
    "evaluate_sequences",
    "init_state",
    "low_complexity_policy",
    "optimal_policy",
    "oracle_delta_n",
    "oracle_q_value",
    "redetect_unselected",
    "rollout_actions",
    "run_selection",
    "sample_tree_actions",
    "tree_refined_apps",
    "tree_weight",
]
