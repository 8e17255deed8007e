"""Command-line entry point: ``semidata <subcommand> [options]``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace

from .core import RngSpec, generate_frame
from .estimator import lmmse_pilot_estimate
from .selection import run_selection
from .sim.config import ExperimentConfig, load_config_file
from .sim.experiment import build_book, run_experiment
from .sim.metrics import ebn0_to_sigma2, nmse
from .sim.output import emit_results, render
from .sim.selftest import run_selftest

log = logging.getLogger("semidata")

# swept parameter -> (config field, default values, parser)
SWEEPS = {
    "sweep-pilot": ("t_p", "2,4,6,8", int),
    "sweep-tu": ("t_u", "25,50,100,200", int),
    "sweep-depth": ("tree_depth", "0,2,4,6,8", int),
    "sweep-doppler": ("epsilon", "0.01,0.015", float),
}

METADATA_NOTE = "metrics are uncoded symbol-vector error rates over data slots 1..t_u (no channel code)"


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.replace(",", " ").split())


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--seed", type=int, dest="master_seed")
    p.add_argument("--trials", type=int)
    p.add_argument("--out", help="output path (stdout when omitted)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--threads", type=int, help="worker processes")
    p.add_argument("--ebn0", type=_float_list, dest="ebn0_db", help="comma-separated Eb/N0 list in dB")
    p.add_argument("--estimators", type=lambda s: tuple(s.replace(",", " ").split()))
    p.add_argument("--t-p", type=int, dest="t_p")
    p.add_argument("--t-u", type=int, dest="t_u")
    p.add_argument("--t-d", type=int, dest="t_d")
    p.add_argument("--n-tx", type=int, dest="n_tx")
    p.add_argument("--n-rx", type=int, dest="n_rx")
    p.add_argument("--constellation")
    p.add_argument("--tree-depth", type=int, dest="tree_depth")
    p.add_argument("--n-sample", type=int, dest="n_sample")
    p.add_argument("--rollout-threshold", type=float, dest="rollout_threshold")
    p.add_argument("--channel-mode", choices=("block", "gauss_markov"), dest="channel_mode")
    p.add_argument("--epsilon", type=float)
    p.add_argument("-v", "--verbose", action="store_true")


_OVERRIDES = (
    "master_seed", "trials", "threads", "ebn0_db", "estimators", "t_p", "t_u", "t_d", "n_tx", "n_rx",
    "constellation", "tree_depth", "n_sample", "rollout_threshold", "channel_mode", "epsilon",
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="semidata", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("sweep-snr", help="vary Eb/N0")
    _common(p)
    for name, (key, default, _) in SWEEPS.items():
        p = sub.add_parser(name, help=f"vary {key}")
        _common(p)
        p.add_argument("--values", default=default, help=f"comma-separated {key} values (default {default})")
    p = sub.add_parser("single-frame", help="run one frame")
    _common(p)
    p.add_argument("--trace", action="store_true", help="emit the per-slot decision trace")
    p.add_argument("--policy", choices=("optimal", "low_complexity"), default="low_complexity")
    p.add_argument("--stream", type=int, default=0)
    p = sub.add_parser("selftest", help="run the oracle-equivalence checks")
    p.add_argument("-v", "--verbose", action="store_true")
    return parser


def make_config(args) -> ExperimentConfig:
    base = load_config_file(args.config) if getattr(args, "config", None) else {}
    cfg = ExperimentConfig(**base)
    return cfg.updated(**{k: getattr(args, k, None) for k in _OVERRIDES})


def _write(text: str, out) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_sweep(args, cfg: ExperimentConfig) -> int:
    log.info(METADATA_NOTE)
    if args.command == "sweep-snr":
        emit = emit_results(run_experiment(cfg), args.format)
        _write(emit, args.out)
        return 0
    key, _, cast = SWEEPS[args.command]
    records, values = [], []
    for raw in args.values.replace(",", " ").split():
        value = cast(raw)
        over = {key: value}
        if key == "epsilon":
            over["channel_mode"] = "gauss_markov"
        recs = run_experiment(replace(cfg, **over))
        records += recs
        values += [value] * len(recs)
    _write(emit_results(records, args.format, sweep_key=key, sweep_values=values), args.out)
    return 0


def cmd_single_frame(args, cfg: ExperimentConfig) -> int:
    book = build_book(cfg)
    ebn0 = cfg.ebn0_db[0]
    sigma2 = ebn0_to_sigma2(ebn0, book.bits_per_symbol)
    spec = RngSpec(cfg.master_seed, args.stream)
    frame = generate_frame(
        cfg.n_tx, cfg.n_rx, cfg.t_p, cfg.t_u, sigma2, book.vectors, spec.child(0),
        t_d=cfg.frame_t_d, epsilon=cfg.epsilon if cfg.time_varying else None,
        evolve_during_pilots=cfg.evolve_during_pilots,
    )
    outcome = run_selection(frame, book, cfg.policy(args.policy), spec.child(1).generator(), trace=True)
    sent = frame.tx_indices[: cfg.t_u]
    h_ref = frame.channel_at(cfg.t_u)
    log.info(
        "Eb/N0=%+.2f dB selected %d/%d  nmse %.4g (pilot-only %.4g)",
        ebn0, outcome.selection_mask.sum(), cfg.t_u,
        nmse(outcome.final_estimate, h_ref),
        nmse(_pilot(frame), h_ref),
    )
    if args.trace:
        rows = []
        for rec in outcome.per_slot_trace:
            row = rec.as_dict()
            row["correct"] = int(rec.detected_index == sent[rec.slot - 1])
            rows.append(row)
        _write(render(rows, args.format), args.out)
    else:
        summary = {
            "selected": int(outcome.selection_mask.sum()),
            "t_u": cfg.t_u,
            "nmse": nmse(outcome.final_estimate, h_ref),
            "nmse_pilot_only": nmse(_pilot(frame), h_ref),
        }
        _write(json.dumps(summary) + "\n", args.out)
    return 0


def _pilot(frame):
    return lmmse_pilot_estimate(frame.pilot_observations, frame.pilot_matrix, frame.noise_variance).matrix


def cmd_selftest(args) -> int:
    failed = 0
    for res in run_selftest():
        status = "PASS" if res.passed else "FAIL"
        print(f"{status}  {res.name:<28} {res.detail}  ({res.seconds:.1f} s)")
        failed += not res.passed
    if failed:
        print(f"{failed} check(s) failed", file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.command == "selftest":
        return cmd_selftest(args)
    try:
        cfg = make_config(args)
    except (ValueError, OSError) as exc:
        print(f"semidata: {exc}", file=sys.stderr)
        return 2
    if args.command == "single-frame":
        return cmd_single_frame(args, cfg)
    return cmd_sweep(args, cfg)


if __name__ == "__main__":
    sys.exit(main())
