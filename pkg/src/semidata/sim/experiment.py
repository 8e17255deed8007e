"""Monte Carlo trials, per-estimator bookkeeping and aggregation."""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from ..core import RngSpec, generate_frame
from ..detector import SymbolBook, app_matrix, constellation_by_name, enumerate_symbol_vectors
from ..estimator import lmmse_from_blocks
from ..selection import FrameContext, redetect_unselected, run_selection
from .config import ESTIMATORS, ExperimentConfig
from .metrics import ebn0_to_sigma2, nmse, symbol_vector_errors

__all__ = [
    "TrialResult",
    "ResultRecord",
    "TrialFailure",
    "build_book",
    "run_trial",
    "run_trials",
    "aggregate",
    "run_experiment",
]

log = logging.getLogger(__name__)

FRAME_STREAM = 0
POLICY_STREAM = 1


@dataclass(frozen=True)
class TrialResult:
    estimator: str
    nmse: float
    errors_initial: int
    errors_final: int
    n_selected: int
    n_selected_correct: int
    errors_unselected_before: int
    errors_unselected_after: int
    t_u: int


@dataclass(frozen=True)
class ResultRecord:
    estimator: str
    ebn0_db: float
    nmse_mean: float
    nmse_stderr: float
    sve_rate_initial: float
    sve_rate_final: float
    selected_fraction: float
    selection_precision: float
    trials: int


class TrialFailure(RuntimeError):
    def __init__(self, seed: int, stream: int, cause: BaseException):
        super().__init__(f"trial failed (master_seed={seed}, stream={stream}): {cause!r}")
        self.seed = seed
        self.stream = stream


def build_book(config: ExperimentConfig) -> SymbolBook:
    points, labels = constellation_by_name(config.constellation)
    return enumerate_symbol_vectors(points, config.n_tx, labels)


def _genie_selection(ctx: FrameContext, sent: np.ndarray) -> np.ndarray:
    return (ctx.k_hat == sent).astype(int)


def _augmented(frame, slots_mask: np.ndarray, regressors: np.ndarray) -> np.ndarray:
    """Estimate from pilots plus the masked data slots with given regressor rows."""
    idx = np.flatnonzero(slots_mask)
    y = np.hstack([frame.pilot_observations, frame.data_observations[:, idx]])
    x = np.hstack([frame.pilot_matrix, regressors[idx].T])
    return lmmse_from_blocks(y, x, frame.noise_variance)


def _redetect(frame, book, h, mask, initial) -> np.ndarray:
    out = initial.copy()
    idx = np.flatnonzero(mask == 0)
    if idx.size:
        apps = app_matrix(frame.data_observations[:, idx], h, frame.noise_variance, book.vectors)
        out[idx] = np.argmax(apps, axis=1)
    return out


def run_trial(config: ExperimentConfig, ebn0_db: float, stream: int, book: Optional[SymbolBook] = None) -> list[TrialResult]:
    """All configured estimators on one shared frame."""
    book = build_book(config) if book is None else book
    sigma2 = ebn0_to_sigma2(ebn0_db, book.bits_per_symbol)
    spec = RngSpec(config.master_seed, stream)
    frame = generate_frame(
        config.n_tx,
        config.n_rx,
        config.t_p,
        config.t_u,
        sigma2,
        book.vectors,
        spec.child(FRAME_STREAM),
        t_d=config.frame_t_d,
        epsilon=config.epsilon if config.time_varying else None,
        evolve_during_pilots=config.evolve_during_pilots,
    )
    t_u = config.t_u
    sent = frame.tx_indices[:t_u]
    h_ref = frame.channel_at(t_u)
    ctx = FrameContext(frame, book, config.rollout_threshold)
    initial = ctx.k_hat
    init_errors = symbol_vector_errors(initial, sent)

    results = []
    for name in config.estimators:
        mask = np.zeros(t_u, dtype=int)
        if name == "pcsi":
            h = frame.channel_at(1)
            apps = app_matrix(ctx.ys, h, sigma2, book.vectors)
            det = np.argmax(apps, axis=1)
            first = final = det
        elif name == "pilot_ce":
            h = ctx.h_pilot
            first = final = initial
        elif name == "semi_opt":
            mask = _genie_selection(ctx, sent)
            h = _augmented(frame, mask, book.vectors[sent])
            first, final = initial, _redetect(frame, book, h, mask, initial)
        elif name == "semi_all":
            mask = np.ones(t_u, dtype=int)
            h = _augmented(frame, mask, ctx.x_tilde)
            first = final = initial
        else:
            kind = "optimal" if name == "semi_pro_opt" else "low_complexity"
            rng = spec.child(POLICY_STREAM, ESTIMATORS.index(name)).generator()
            outcome = run_selection(frame, book, config.policy(kind), rng, ctx=ctx)
            mask = outcome.selection_mask
            h = outcome.final_estimate
            first, final = initial, redetect_unselected(outcome, frame, book)
        unselected = mask == 0
        results.append(
            TrialResult(
                estimator=name,
                nmse=nmse(h, h_ref),
                errors_initial=init_errors if name != "pcsi" else symbol_vector_errors(first, sent),
                errors_final=symbol_vector_errors(final, sent),
                n_selected=int(mask.sum()),
                n_selected_correct=int(np.sum((mask == 1) & (initial == sent))),
                errors_unselected_before=symbol_vector_errors(first[unselected], sent[unselected]),
                errors_unselected_after=symbol_vector_errors(final[unselected], sent[unselected]),
                t_u=t_u,
            )
        )
    return results


def _trial_job(args):
    config, ebn0_db, stream = args
    try:
        return run_trial(config, ebn0_db, stream)
    except Exception as exc:  # noqa: BLE001 - re-raised with the seed attached
        raise TrialFailure(config.master_seed, stream, exc) from exc


def run_trials(config: ExperimentConfig, ebn0_db: float, stream_offset: int = 0) -> dict[str, list[TrialResult]]:
    """Per-estimator trial results, in trial order regardless of ``threads``."""
    jobs = [(config, ebn0_db, stream_offset + i) for i in range(config.trials)]
    if config.threads > 1:
        with ProcessPoolExecutor(max_workers=config.threads) as pool:
            per_trial = list(pool.map(_trial_job, jobs, chunksize=max(1, len(jobs) // (4 * config.threads))))
    else:
        per_trial = [_trial_job(j) for j in jobs]
    out = {name: [] for name in config.estimators}
    for trial in per_trial:
        for r in trial:
            out[r.estimator].append(r)
    return out


def aggregate(estimator: str, ebn0_db: float, results: list[TrialResult]) -> ResultRecord:
    """Mean and standard error of NMSE plus pooled rates.

    Selection precision is pooled over all selected slots; it is 0 when
    nothing was selected.
    """
    values = np.array([r.nmse for r in results])
    n = len(values)
    stderr = float(values.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    slots = sum(r.t_u for r in results)
    selected = sum(r.n_selected for r in results)
    correct = sum(r.n_selected_correct for r in results)
    return ResultRecord(
        estimator=estimator,
        ebn0_db=float(ebn0_db),
        nmse_mean=float(values.mean()),
        nmse_stderr=stderr,
        sve_rate_initial=sum(r.errors_initial for r in results) / slots,
        sve_rate_final=sum(r.errors_final for r in results) / slots,
        selected_fraction=selected / slots,
        selection_precision=correct / selected if selected else 0.0,
        trials=n,
    )


def run_experiment(config: ExperimentConfig, ebn0_list: Optional[Iterable[float]] = None) -> list[ResultRecord]:
    """Aggregated records for every (estimator, Eb/N0) cell.

    Trial ``i`` at every SNR uses stream ``i``, so cells are paired across
    estimators and across SNR points.
    """
    records = []
    for ebn0_db in config.ebn0_db if ebn0_list is None else ebn0_list:
        per_est = run_trials(config, ebn0_db)
        for name in config.estimators:
            rec = aggregate(name, ebn0_db, per_est[name])
            log.info("%-13s Eb/N0=%+.2f dB  nmse=%.4g +- %.2g", name, ebn0_db, rec.nmse_mean, rec.nmse_stderr)
            records.append(rec)
    order = {name: i for i, name in enumerate(ESTIMATORS)}
    records.sort(key=lambda r: (r.ebn0_db, order[r.estimator]))
    return records
