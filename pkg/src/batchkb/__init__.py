"""Batched kernelized bandits: BPE, Robust-BPE, batch schedules and regret tooling."""

from .bpe import ConfidenceParams, eliminate, report_point, run_bpe, select_max_variance
from .environment import Domain, Environment, PerturbationSet, perturbation_neighborhood, robust_value
from .errors import ConfigError, ConstructionError, InputError, LogicError, NumericalError
from .gp import GPPosterior, empirical_info_gain, empty_posterior
from .kernels import KernelSpec, eval_kernel, gram_matrix
from .metrics import RegretTrace, aggregate_trials
from .robust import RobustConfig, build_exploration_set, run_robust_bpe, xi_regret
from .schedules import (BatchSchedule, OverflowReport, classify_bad_batch, fixed_schedule_li,
                        fixed_schedule_refined, growing_schedule_li, growing_schedule_param,
                        reference_endpoints)

__version__ = "0.1.0"
