"""surveyblend: estimate a population mean by blending a nonprobability
sample with a probability sample.

The package provides reweighted point estimators (IPW and doubly robust),
closed-form variance and cross-covariance estimators for them, optimal
pooling with the probability-sample estimate, and a repeated-sampling
Monte Carlo harness that serves as the verification oracle.
"""

__version__ = "0.1.0"

from .combiner import PooledReport, combine, optimal_weight, pool, pooled_variance
from .designs import (
    JointProbProvider,
    hajek_mean,
    ht_cov_estimate,
    ht_mean,
    ht_var_estimate,
    provider_for,
)
from .estimators import EstimatorKind, point_estimate
from .nuisance import (
    NuisanceFit,
    SolverError,
    fit_kim_haziza,
    fit_nuisance,
    fit_outcome_ml,
    fit_selection_calibration,
    fit_selection_pml,
    predict_outcome,
    predict_selection,
)
from .simulate import (
    Covariate,
    EvalPlan,
    MonteCarloSummary,
    ScenarioConfig,
    SimulationError,
    SummaryRow,
    draw_samples,
    generate_population,
    run_replications,
)
from .types import (
    DesignDescriptor,
    DesignKind,
    FinitePopulation,
    FitMethod,
    ModelSpec,
    ObservedData,
    OutcomeFamily,
    UnitRecord,
    ValidationError,
    validate,
)
from .uncertainty import (
    CenteringTerms,
    EstimateReport,
    Regime,
    ResidualVarianceModel,
    centering_terms,
    cov_estimate,
    estimate_report,
    regression_adjustment,
    residual_variance,
    var_estimate,
    var_prob_estimate,
)

__all__ = [
    "CenteringTerms",
    "Covariate",
    "DesignDescriptor",
    "DesignKind",
    "EstimateReport",
    "EstimatorKind",
    "EvalPlan",
    "FinitePopulation",
    "FitMethod",
    "JointProbProvider",
    "ModelSpec",
    "MonteCarloSummary",
    "NuisanceFit",
    "ObservedData",
    "OutcomeFamily",
    "PooledReport",
    "Regime",
    "ResidualVarianceModel",
    "ScenarioConfig",
    "SimulationError",
    "SolverError",
    "SummaryRow",
    "UnitRecord",
    "ValidationError",
    "centering_terms",
    "combine",
    "cov_estimate",
    "draw_samples",
    "estimate_report",
    "fit_kim_haziza",
    "fit_nuisance",
    "fit_outcome_ml",
    "fit_selection_calibration",
    "fit_selection_pml",
    "generate_population",
    "hajek_mean",
    "ht_cov_estimate",
    "ht_mean",
    "ht_var_estimate",
    "optimal_weight",
    "point_estimate",
    "pool",
    "pooled_variance",
    "predict_outcome",
    "predict_selection",
    "provider_for",
    "regression_adjustment",
    "residual_variance",
    "run_replications",
    "validate",
    "var_estimate",
    "var_prob_estimate",
]
