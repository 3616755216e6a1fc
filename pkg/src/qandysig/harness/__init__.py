from .config import ExperimentPlan, load_config, resolve_plan
from .experiment import ExperimentResult, run_experiment, trial_seed, wilson_interval
from .fitting import DecayFit, fit_decay, fit_summary
from .thresholds import gap_for, optimize_thresholds

__all__ = [
    "ExperimentPlan",
    "ExperimentResult",
    "DecayFit",
    "load_config",
    "resolve_plan",
    "run_experiment",
    "trial_seed",
    "wilson_interval",
    "fit_decay",
    "fit_summary",
    "gap_for",
    "optimize_thresholds",
]
