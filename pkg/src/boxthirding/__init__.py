"""Anytime best-arm identification with Box Thirding and reference baselines."""

from ._utils import (ConfigError, DataError, InsufficientBudgetError, InvariantError,
                     NoRecommendationError, PolicyStalled, RandomSource)
from .analysis import (CandidateReport, ErrorDecomposition, c0_bounds, candidate_set,
                       candidate_sets, decompose_error, is_data_poor, non_inclusion_exact)
from .b3 import BoxThirding, flow_recursion
from .base import AnytimePolicy, PolicyTrace
from .baselines import (BracketedSH, BracketedUCB, SequentialHalving, UniformSampling,
                        make_policy, sh_run, sh_t0)
from .harness import ExperimentConfig, TrialResult, aggregate, run_experiment, run_trial
from .instances import (ArmMeans, BanditInstance, NoiseModel, caption_means_from_counts,
                        make_alpha_instance, n_eps, read_caption_csv, sample_reward)
from .schedules import Schedule, schedule_budget, solve_rate

__version__ = "0.1.0"

__all__ = [
    "AnytimePolicy", "ArmMeans", "BanditInstance", "BoxThirding", "BracketedSH", "BracketedUCB",
    "CandidateReport", "ConfigError", "DataError", "ErrorDecomposition", "ExperimentConfig",
    "InsufficientBudgetError", "InvariantError", "NoRecommendationError", "NoiseModel",
    "PolicyStalled", "PolicyTrace", "RandomSource", "Schedule", "SequentialHalving",
    "TrialResult", "UniformSampling", "aggregate", "c0_bounds", "candidate_set", "candidate_sets",
    "caption_means_from_counts", "decompose_error", "flow_recursion", "is_data_poor",
    "make_alpha_instance", "make_policy", "n_eps", "non_inclusion_exact", "read_caption_csv",
    "run_experiment", "run_trial", "sample_reward", "schedule_budget", "sh_run", "sh_t0",
    "solve_rate",
]
