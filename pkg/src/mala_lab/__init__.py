"""Sampling laboratory for the preconditioned Langevin algorithm on spectral truncations."""

__version__ = "0.1.0"

from .spectral import (
    SpectralField,
    CovarianceSpectrum,
    sobolev_inner,
    sobolev_norm_sq,
    cameron_martin_norm_sq,
    covariance_apply,
    sample_reference,
    trace_sobolev,
    project,
)
from .targets import TargetModel, UnsupportedTargetError
from .kernels import (
    KernelParams,
    RecordingPolicy,
    StepOutcome,
    ChainTrace,
    RecordingError,
    mala_propose,
    rwm_propose,
    log_accept_ratio,
    rwm_log_accept_ratio,
    mh_step,
    run_chain,
    stationary_start,
)
from .diagnostics import (
    QDecomposition,
    QStudy,
    SpeedCurve,
    decompose_q,
    limiting_alpha,
    limiting_alpha_mc,
    speed_and_optimum,
    esjd,
    empirical_drift,
    martingale_increments,
    martingale_path,
    martingale_cov_trace,
    nested_drift_estimates,
    sample_q_values,
)
from .limits import (
    PathSample,
    AcfFitError,
    interpolate_chain,
    coord_path,
    euler_spde,
    autocorrelation,
    acf_rate_fit,
)
from .config import ExperimentConfig, ConfigError, parse_config
from .experiments import seed_for, run_experiment

__all__ = [name for name in dir() if not name.startswith("_")]
