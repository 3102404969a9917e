from .config import ExperimentConfig, load_config, parse_config
from .experiment import (
    ExperimentResult,
    LearnerView,
    RegretCurve,
    TrialSpec,
    build_policy,
    curves_to_csv,
    read_curves_csv,
    run_experiment,
    run_trial,
    run_trials,
    summarize,
)
from .fitting import ExponentFit, fit_exponent, fit_log_squared, fit_sqrt
from .systems import benchmark2x2, named_system, random_system, scalar_b
