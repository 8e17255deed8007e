"""Experiment configuration and its flat ``key = value`` file format."""
from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

from ..selection.policy import PolicyParams

__all__ = ["ESTIMATORS", "ExperimentConfig", "load_config_file", "parse_config_text"]

ESTIMATORS = ("pcsi", "pilot_ce", "semi_opt", "semi_pro_opt", "semi_pro_low", "semi_all")


@dataclass(frozen=True)
class ExperimentConfig:
    n_tx: int = 2
    n_rx: int = 4
    t_p: int = 4
    t_u: int = 50
    t_d: Optional[int] = None
    constellation: str = "4qam"
    ebn0_db: tuple[float, ...] = (-2.0, 0.0)
    estimators: tuple[str, ...] = ("pcsi", "pilot_ce", "semi_opt", "semi_pro_low", "semi_all")
    tree_depth: int = 8
    n_sample: int = 10
    rollout_threshold: float = 0.5
    gamma: float = 1.0
    trials: int = 100
    channel_mode: str = "block"
    epsilon: float = 0.0
    evolve_during_pilots: bool = True
    master_seed: int = 0
    threads: int = 1

    def __post_init__(self):
        for name in ("n_tx", "n_rx", "t_p", "t_u", "trials", "threads"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.t_d is not None and self.t_d < self.t_u:
            raise ValueError("t_d must be >= t_u")
        if self.t_p < self.n_tx:
            raise ValueError("t_p must be >= n_tx")
        unknown = set(self.estimators) - set(ESTIMATORS)
        if unknown:
            raise ValueError(f"unknown estimators: {sorted(unknown)}")
        if self.channel_mode not in ("block", "gauss_markov"):
            raise ValueError(f"unknown channel_mode {self.channel_mode!r}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        self.policy("low_complexity")  # validates the policy fields

    @property
    def frame_t_d(self) -> int:
        return self.t_u if self.t_d is None else self.t_d

    @property
    def time_varying(self) -> bool:
        return self.channel_mode == "gauss_markov"

    def policy(self, kind: str) -> PolicyParams:
        return PolicyParams(self.tree_depth, self.n_sample, self.rollout_threshold, self.gamma, kind)

    def updated(self, **overrides) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})


_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _coerce(key: str, raw: str):
    kind = _TYPES[key]
    raw = raw.strip()
    if key in ("ebn0_db",):
        return tuple(float(v) for v in raw.replace(",", " ").split())
    if key in ("estimators",):
        return tuple(v for v in raw.replace(",", " ").split())
    if key == "t_d":
        return None if raw.lower() in ("", "none") else int(raw)
    if kind == "bool":
        return raw.lower() in ("1", "true", "yes", "on")
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(raw)
    return raw


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _TYPES:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        out[key] = _coerce(key, value)
    return out


def load_config_file(path) -> dict:
    return parse_config_text(Path(path).read_text())
