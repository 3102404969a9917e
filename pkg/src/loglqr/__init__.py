"""Online LQR learners with logarithmic regret when one system matrix is known,
the matching square-root lower-bound family, and a seeded regret harness."""

from ._core import BACKEND
from .control import (
    LqrSystem,
    RiccatiSolution,
    StabilityCertificate,
    certificate_from_cost,
    closed_loop,
    cost_bounds,
    dare_residual,
    expected_regret_fixed_gain,
    infinite_horizon_cost,
    lqr,
    lyapunov_value_matrix,
    optimal_controller,
    optimal_cost,
    solve_dare,
    spectral_radius,
    state_covariance,
)
from .errors import (
    ConfigError,
    DimensionMismatch,
    HorizonTooShort,
    InsufficientData,
    InvalidBound,
    InvariantViolation,
    LqrError,
    NoPositiveRoot,
    NonConvergence,
    NumericOverflow,
    SingularInnerMatrix,
    UnstableController,
)
from .estimation import RlsEstimator, confidence_bound, estimate, gram_min_eigenvalue, update
from .rng import Purpose, RngStream, derive_stream_id
from .simulation import LinearPolicy, Segment, SegmentResult, Trajectory, rollout, step

__version__ = "0.1.0"
