import numpy as np
import pytest

from semidata.core import RngSpec, build_pilot_matrix, complex_normal, generate_frame
from semidata.estimator import error_covariance, lmmse_pilot_estimate, real_trace
from semidata.selection import (
    FrameContext,
    PolicyParams,
    all_tree_sequences,
    apply_action,
    delta_n,
    init_state,
    low_complexity_policy,
    optimal_policy,
    oracle_delta_n,
    oracle_q_value,
    redetect_unselected,
    rollout_actions,
    run_selection,
    sample_tree_actions,
    tree_refined_apps,
    tree_weight,
)
from semidata.sim.selftest import random_delta_instance, random_policy_instance, rel_close


def pilot_state(frame):
    return init_state(frame.pilot_matrix, frame.noise_variance, frame.pilot_observations)


# -- state -------------------------------------------------------------------

def test_init_state_gram_inverse():
    s = init_state(build_pilot_matrix(2, 4), 1.0)
    np.testing.assert_allclose(s.gram_inverse, np.eye(2) / 5, atol=1e-15)
    assert s.action_history == () and s.cursor == 1


def test_initial_estimate_is_pilot_estimate(frame0db):
    s = pilot_state(frame0db)
    ref = lmmse_pilot_estimate(frame0db.pilot_observations, frame0db.pilot_matrix, 0.5).matrix
    assert np.linalg.norm(s.estimate() - ref) <= 1e-14 * np.linalg.norm(ref)


def test_skip_leaves_estimate_unchanged(frame0db):
    s = pilot_state(frame0db)
    s2 = apply_action(s, 0, frame0db.tx_symbols[:, 0], frame0db.y(1))
    np.testing.assert_array_equal(s2.estimate(), s.estimate())
    assert s2.action_history == (0,) and s2.cursor == 2


def test_correct_selection_shrinks_covariance(frame0db):
    s = pilot_state(frame0db)
    s2 = apply_action(s, 1, frame0db.tx_symbols[:, 0], frame0db.y(1))
    before = real_trace(error_covariance(s.x_true_side, s.x_detected_side, 0.5))
    after = real_trace(error_covariance(s2.x_true_side, s2.x_detected_side, 0.5))
    assert after < before


def test_bad_action_rejected(frame0db):
    with pytest.raises(ValueError):
        apply_action(pilot_state(frame0db), 2, np.zeros(2), np.zeros(4))


def test_bookkeeping_and_refactor(gen):
    s = init_state(build_pilot_matrix(2, 4), 0.3, refactor_interval=5)
    for step in range(40):
        action = int(gen.integers(0, 2))
        s = apply_action(s, action, complex_normal(gen, 2), complex_normal(gen, 1))
        assert s.x_detected_side.shape[1] - 4 == s.n_selected
        assert s.observations.shape[1] == s.x_detected_side.shape[1]
        np.testing.assert_allclose(s.gram_inverse, s.direct_gram_inverse(), atol=1e-8)
    assert len(s.recompute_events) >= s.n_selected // 5


# -- rollout / tree ---------------------------------------------------------

def test_rollout_threshold():
    np.testing.assert_array_equal(rollout_actions([0.9, 0.3, 0.5], 0.5), [1, 0, 1])
    with pytest.raises(ValueError):
        rollout_actions([0.5], 1.2)


def test_tree_sampling_rate():
    draws = sample_tree_actions(np.full(10_000, 0.7), np.random.default_rng(2))
    se = np.sqrt(0.7 * 0.3 / draws.size)
    assert abs(draws.mean() - 0.7) < 3 * se


def test_tree_weights():
    assert tree_weight([1, 0], [0.9, 0.8]) == pytest.approx(0.18, rel=1e-14)
    assert tree_weight([], []) == 1.0
    for depth in range(1, 9):
        apps = np.random.default_rng(depth).uniform(size=depth)
        assert abs(np.sum(tree_weight(all_tree_sequences(depth), apps)) - 1) <= 1e-12
    with pytest.raises(ValueError):
        tree_weight([1], [0.5, 0.5])


def test_refined_apps_without_tree_selection(frame0db, book4):
    ctx = FrameContext(frame0db, book4)
    s = pilot_state(frame0db)
    apps = tree_refined_apps(s, [0, 0, 0], ctx, n=1)
    np.testing.assert_allclose(apps, ctx.apps[0:4], rtol=1e-10, atol=1e-300)
    apps = tree_refined_apps(s, [1, 0, 1], ctx, n=1)
    np.testing.assert_allclose(apps.sum(axis=1), 1.0, atol=1e-12)


# -- closed-form gain --------------------------------------------------------

def test_delta_matches_oracle():
    gen = np.random.default_rng(40)
    for _ in range(1000):
        inst = random_delta_instance(gen)
        assert rel_close(delta_n(**inst), oracle_delta_n(**inst), 1e-8)


def test_delta_zero_vector():
    s = init_state(build_pilot_matrix(2, 4), 1.0)
    assert delta_n(s, [], np.zeros(2), np.ones(2)) == 0.0


def test_delta_sign_for_correct_and_wrong_detection():
    s = init_state(build_pilot_matrix(2, 4), 0.5)
    x = np.array([1, 1j]) / np.sqrt(2) * np.sqrt(2)
    assert delta_n(s, [], x, x) > 0  # correct virtual pilot always helps
    assert delta_n(s, [], x, -x) < 0  # badly wrong one hurts


# -- policies ---------------------------------------------------------------

@pytest.mark.parametrize("depth", [0, 1, 2, 3])
def test_optimal_policy_matches_q_argmax(depth):
    gen = np.random.default_rng(50 + depth)
    for i in range(10):
        state, ctx, _ = random_policy_instance(gen, 50, 10 * depth + i, depth)
        params = PolicyParams(tree_depth=depth, policy_kind="optimal")
        action, score = optimal_policy(state, ctx, params)
        q1, q0 = oracle_q_value(state, 1, ctx, params), oracle_q_value(state, 0, ctx, params)
        assert action == int(q1 >= q0)
        assert score == pytest.approx(q1 - q0, rel=1e-7, abs=1e-12)


def test_skip_q_value_zero_without_lookahead(frame0db, book4):
    # last slot: no tree, no rollout tail, so skipping changes nothing
    ctx = FrameContext(frame0db, book4)
    params = PolicyParams(tree_depth=0)
    s = pilot_state(frame0db)
    assert abs(oracle_q_value(s, 0, ctx, params, n=ctx.t_u)) < 1e-12


def test_low_complexity_equals_optimal_for_certain_apps(book4):
    frame = generate_frame(2, 4, 4, 20, 1e-4, book4.vectors, RngSpec(3, 1))
    ctx = FrameContext(frame, book4)
    assert np.all(ctx.reliability > 1 - 1e-9)
    s = pilot_state(frame)
    for n in range(1, 6):
        opt = optimal_policy(s, ctx, PolicyParams(tree_depth=4), n)
        low = low_complexity_policy(s, ctx, PolicyParams(tree_depth=4, n_sample=3), np.random.default_rng(n), n)
        assert opt[0] == low[0]
        s = apply_action(s, opt[0], ctx.x_hat[n - 1], ctx.ys[:, n - 1])


def test_policy_params_validation():
    with pytest.raises(ValueError):
        PolicyParams(gamma=0.9)
    with pytest.raises(ValueError):
        PolicyParams(n_sample=0)
    with pytest.raises(ValueError):
        PolicyParams(policy_kind="greedy")


# -- driver -----------------------------------------------------------------

def test_near_noiseless_frame_selects_everything(book4):
    frame = generate_frame(2, 4, 4, 20, 1e-4, book4.vectors, RngSpec(5, 0))
    out = run_selection(frame, book4, PolicyParams(tree_depth=3), np.random.default_rng(0), trace=True)
    assert out.selection_mask.sum() == 20
    np.testing.assert_array_equal(out.initial_detections, frame.tx_indices[:20])
    assert len(out.per_slot_trace) == 20 and out.per_slot_trace[0].slot == 1
    assert redetect_unselected(out, frame, book4).tolist() == out.initial_detections.tolist()
    assert out.redetected_indices == []


def test_selection_is_deterministic(frame0db, book4):
    params = PolicyParams(tree_depth=4)
    a = run_selection(frame0db, book4, params, RngSpec(1, 2).generator())
    b = run_selection(frame0db, book4, params, RngSpec(1, 2).generator())
    np.testing.assert_array_equal(a.selection_mask, b.selection_mask)
    np.testing.assert_array_equal(a.final_estimate, b.final_estimate)


def test_estimate_matches_mask(frame0db, book4):
    out = run_selection(frame0db, book4, PolicyParams(tree_depth=4, policy_kind="optimal"))
    ctx = FrameContext(frame0db, book4)
    sel = np.flatnonzero(out.selection_mask)
    y = np.hstack([frame0db.pilot_observations, ctx.ys[:, sel]])
    x = np.hstack([frame0db.pilot_matrix, ctx.x_hat[sel].T])
    ref = y @ x.conj().T @ np.linalg.inv(x @ x.conj().T + 0.5 * np.eye(2))
    np.testing.assert_allclose(out.final_estimate, ref, rtol=1e-10)


def test_no_selection_identity_and_redetection(frame0db, book4):
    ctx = FrameContext(frame0db, book4)
    out = run_selection(frame0db, book4, PolicyParams(tree_depth=2))
    out.selection_mask = np.zeros_like(out.selection_mask)
    h_p = ctx.h_pilot
    np.testing.assert_array_equal(redetect_unselected(out, frame0db, book4, h_final=h_p), ctx.k_hat)
    assert out.redetected_indices == list(range(1, 31))
