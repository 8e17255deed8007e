"""Quick oracle-equivalence checks run by ``semidata selftest``."""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..core import RngSpec, build_pilot_matrix, complex_normal, draw_channel, generate_frame
from ..detector import enumerate_symbol_vectors, qam4
from ..estimator import hermitian_inverse, lmmse_pilot_estimate, lmmse_pilot_mse, rank_one_update_inverse
from ..selection import (
    FrameContext,
    PolicyParams,
    all_tree_sequences,
    apply_action,
    delta_n,
    init_state,
    optimal_policy,
    oracle_delta_n,
    oracle_q_value,
    tree_weight,
)

__all__ = ["CheckResult", "random_delta_instance", "random_policy_instance", "CHECKS", "run_selftest"]


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def random_delta_instance(gen: np.random.Generator):
    """Random state plus a gain query with mismatched true/detected columns."""
    n_tx = int(gen.integers(2, 4))
    t_p = int(gen.integers(n_tx, 5))
    sigma2 = float(gen.uniform(0.1, 2.0))
    state = init_state(complex_normal(gen, (n_tx, t_p)), sigma2)
    for _ in range(int(gen.integers(0, 3))):
        state = apply_action(state, 1, complex_normal(gen, n_tx), np.zeros(1), x_true=complex_normal(gen, n_tx))
    length = int(gen.integers(0, 4))
    a = gen.integers(0, 2, length)
    return dict(
        state=state,
        a=a,
        x_hat_n=complex_normal(gen, n_tx),
        x_tilde_n=complex_normal(gen, n_tx),
        future_hat=complex_normal(gen, (length, n_tx)),
        future_tilde=complex_normal(gen, (length, n_tx)),
    )


def random_policy_instance(gen: np.random.Generator, seed: int, stream: int, depth: int, t_u: int = 12):
    """A mid-frame state of a random 4-QAM 2x4 frame and its context."""
    pts, labels = qam4()
    book = enumerate_symbol_vectors(pts, 2, labels)
    sigma2 = 1.0 / (2 * 10 ** (float(gen.uniform(-3, 3)) / 10))
    frame = generate_frame(2, 4, 4, t_u, sigma2, book.vectors, RngSpec(seed, stream))
    ctx = FrameContext(frame, book, 0.5)
    state = init_state(frame.pilot_matrix, sigma2, frame.pilot_observations)
    for n in range(1, int(gen.integers(1, t_u))):
        state = apply_action(state, int(gen.integers(0, 2)), ctx.x_hat[n - 1], ctx.ys[:, n - 1])
    return state, ctx, PolicyParams(tree_depth=depth, policy_kind="optimal")


def rel_close(a: float, b: float, rtol: float, atol: float = 1e-12) -> bool:
    return abs(a - b) <= max(rtol * max(abs(a), abs(b)), atol)


def check_pilot_mse(frames: int = 2000, seed: int = 11):
    gen = np.random.default_rng(seed)
    p = build_pilot_matrix(2, 4)
    errs = []
    for _ in range(frames):
        h = draw_channel(4, 2, gen)
        y = h @ p + complex_normal(gen, (4, 4), 1.0)
        errs.append(np.sum(np.abs(lmmse_pilot_estimate(y, p, 1.0).matrix - h) ** 2))
    mc, cf = float(np.mean(errs)), lmmse_pilot_mse(p, 1.0, 4)
    return abs(mc - cf) / cf < 0.05, f"monte carlo {mc:.4f} vs closed form {cf:.4f}"


def check_delta_oracle(instances: int = 300, seed: int = 12):
    gen = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(instances):
        inst = random_delta_instance(gen)
        d, o = delta_n(**inst), oracle_delta_n(**inst)
        if not rel_close(d, o, 1e-8):
            return False, f"mismatch {d!r} vs {o!r}"
        worst = max(worst, abs(d - o) / max(abs(o), 1e-12))
    return True, f"worst relative error {worst:.2e}"


def check_policy_q(states: int = 40, seed: int = 13):
    gen = np.random.default_rng(seed)
    for i in range(states):
        state, ctx, params = random_policy_instance(gen, seed, i, depth=i % 4)
        action, _ = optimal_policy(state, ctx, params)
        q1 = oracle_q_value(state, 1, ctx, params)
        q0 = oracle_q_value(state, 0, ctx, params)
        if action != int(q1 >= q0):
            return False, f"state {i}: policy {action}, Q1-Q0 = {q1 - q0:.3e}"
    return True, f"{states} states agree"


def check_rank_one(instances: int = 300, seed: int = 14):
    gen = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(instances):
        size = int(gen.integers(1, 9))
        a = complex_normal(gen, (size, size + 2))
        q = hermitian_inverse(a @ a.conj().T + 0.1 * np.eye(size))
        x = complex_normal(gen, size)
        updated = rank_one_update_inverse(q, x)
        target = np.linalg.inv(q) + np.outer(x, x.conj())
        worst = max(worst, float(np.max(np.abs(updated @ target - np.eye(size)))))
    return worst < 1e-10, f"worst |Q' (Q^-1 + x x^H) - I| = {worst:.2e}"


def check_weights(seed: int = 15):
    gen = np.random.default_rng(seed)
    for depth in range(0, 9):
        apps = gen.uniform(size=depth)
        total = float(np.sum(tree_weight(all_tree_sequences(depth), apps))) if depth else 1.0
        if abs(total - 1.0) > 1e-12:
            return False, f"depth {depth}: weights sum to {total!r}"
    return True, "weights normalize for depth 0..8"


CHECKS: dict[str, Callable] = {
    "pilot_mse_closed_form": check_pilot_mse,
    "delta_oracle_equivalence": check_delta_oracle,
    "policy_q_equivalence": check_policy_q,
    "rank_one_update": check_rank_one,
    "tree_weight_normalization": check_weights,
}


def run_selftest() -> list[CheckResult]:
    out = []
    for name, fn in CHECKS.items():
        t0 = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as exc:  # noqa: BLE001 - reported as a failed check
            ok, detail = False, f"raised {exc!r}"
        out.append(CheckResult(name, bool(ok), detail, time.perf_counter() - t0))
    return out
