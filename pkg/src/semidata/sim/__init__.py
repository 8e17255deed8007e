"""Experiment harness: configuration, Monte Carlo trials, metrics and output."""
from .config import ESTIMATORS, ExperimentConfig
from .experiment import ResultRecord, TrialResult, run_experiment, run_trial, run_trials
from .metrics import ebn0_to_sigma2, nmse
from .output import COLUMNS, emit_results
