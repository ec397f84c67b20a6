"""De-biased LASSO: confidence intervals and p-values for sparse linear models."""

from ._normal import normal_cdf, normal_quantile
from .data import Dataset, ProblemScale, SampleCovariance, load_csv, sample_covariance
from .debias import BiasDiagnostics, DebiasedFit, bias_decomposition, debias, empirical_bias
from .decorrelate import (
    DecorrelationOptions, Decorrelator, build_decorrelator,
    compatibility_constant_bruteforce, generalized_coherence, solve_row,
    solve_row_bounded,
)
from .exceptions import DegenerateFitError, InputError, NumericError, ScaleError
from .inference import (
    InferenceReport, JointRegion, confidence_intervals, joint_region,
    oracle_power_bound, p_values, power_function, test_family,
)
from .lasso import LassoFit, ScaledLassoFit, lasso_fit, scaled_lasso_fit, soft_threshold
from .simulation import (
    SimConfig, SimulationOutcome, SyntheticTruth, circulant_sigma,
    export_diagnostics, generate, run_configuration,
)

__version__ = "0.1.0"

from .estimator import DebiasedLasso, ScaledLasso  # noqa: E402
