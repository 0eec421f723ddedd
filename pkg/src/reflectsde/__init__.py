"""Simulation and drift estimation for reflected stochastic differential
equations with one- and two-sided barriers."""

from .errors import ConfigError, DataError, ModelError, UsageError
from .model import (
    BarrierConfig,
    DriftSpec,
    ModelConfig,
    RegimeDiagnostics,
    SamplingPlan,
    eval_drift,
    eval_drift_dtheta,
    eval_drift_dtheta2,
    validate_regime,
)
from .simulate import (
    LEPINGLE,
    PROJECTION,
    SamplePath,
    SimOptions,
    TwoFactorPath,
    read_path_csv,
    read_two_factor_csv,
    sample_min_given_endpoint,
    simulate_path,
    simulate_two_factor,
    step_one_sided_lower,
    step_two_sided,
    write_path_csv,
    write_two_factor_csv,
)
from .stationary import (
    DensityGrid,
    information,
    invariant_density,
    scale_density,
    speed_density,
    stationary_average,
)
from .estimate import (
    EstimateResult,
    asymptotic_stderr,
    attach_stderr,
    confidence_interval,
    contrast,
    estimate_nlse,
    estimate_power_closed_form,
    estimate_two_factor,
    minimize_unimodal,
    nlse_closed_form_power,
    nlse_optimize,
    realized_volatility,
)
from .harness import (
    McConfig,
    McRun,
    McSummary,
    NormalityReport,
    TwoFactorMcConfig,
    normality_diagnostic,
    run_mc,
    run_mc_two_factor,
    summarize,
)

__version__ = "0.1.0"

__all__ = [
    "BarrierConfig",
    "ConfigError",
    "DataError",
    "DensityGrid",
    "DriftSpec",
    "EstimateResult",
    "LEPINGLE",
    "McConfig",
    "McRun",
    "McSummary",
    "ModelConfig",
    "ModelError",
    "NormalityReport",
    "PROJECTION",
    "RegimeDiagnostics",
    "SamplePath",
    "SamplingPlan",
    "SimOptions",
    "TwoFactorMcConfig",
    "TwoFactorPath",
    "UsageError",
    "asymptotic_stderr",
    "attach_stderr",
    "confidence_interval",
    "contrast",
    "estimate_nlse",
    "estimate_power_closed_form",
    "estimate_two_factor",
    "eval_drift",
    "eval_drift_dtheta",
    "eval_drift_dtheta2",
    "information",
    "invariant_density",
    "minimize_unimodal",
    "nlse_closed_form_power",
    "nlse_optimize",
    "normality_diagnostic",
    "read_path_csv",
    "read_two_factor_csv",
    "realized_volatility",
    "run_mc",
    "run_mc_two_factor",
    "sample_min_given_endpoint",
    "scale_density",
    "simulate_path",
    "simulate_two_factor",
    "speed_density",
    "stationary_average",
    "step_one_sided_lower",
    "step_two_sided",
    "summarize",
    "validate_regime",
    "write_path_csv",
    "write_two_factor_csv",
    "__version__",
]
