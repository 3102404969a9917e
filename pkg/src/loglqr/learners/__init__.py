from .algorithms import (
    ABORT_DARE,
    ABORT_GAIN,
    ABORT_STATE,
    AlgorithmAPolicy,
    AlgorithmBPolicy,
    algorithm_a_policy,
    algorithm_b_policy,
)
from .baselines import CeEpsGreedyPolicy, FixedGainPolicy, OraclePolicy, baseline_policy
from .calibrate import CalibrationResult, calibrate
from .config import DerivedParams, LearnerConfig, derive_params_alg_a, derive_params_alg_b, phase_schedule
from .monitor import GroundTruth, MonitorReport, good_event_monitor
