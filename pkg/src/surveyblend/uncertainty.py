"""Variance and covariance estimation for the reweighted estimators.

Every asymptotic variance here has the same two-part shape: a design
variance of a Horvitz-Thompson mean over the probability sample, applied
to centered outcome-model predictions, plus a selection term over the
nonprobability sample built from centered outcome residuals,

    var = ht_var(pred_a - pred_center)
        + (1/N^2) sum_B (1 - pi_i) / pi_i^2 (y_i - outcome_center_i)^2
        + C,

where C is a mean-zero correction used only under the Kim-Haziza doubly
robust regime. The centering vectors depend on which estimator is being
assessed and on which nuisance model is assumed correct; those that adjust
for selection-model estimation error involve a weighted-least-squares
coefficient (:func:`regression_adjustment`) of the (possibly centered)
outcomes or residuals on the selection covariates.

Covariances with the probability-sample estimators reduce to the design
covariance of two Horvitz-Thompson means over sample A: the centered
predictions against the outcomes centered at 0 (HT) or at the Hajek mean.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .designs import JointProbProvider, hajek_mean, ht_cov_estimate, ht_mean, ht_var_estimate
from .estimators import DR_KINDS, EstimatorKind, IPW_KINDS, PROB_KINDS, point_estimate
from .nuisance import NuisanceFit, check_selection_floor, solve_spd
from .types import DesignKind, FitMethod, ObservedData, ValidationError

__all__ = [
    "CenteringTerms",
    "EstimateReport",
    "Regime",
    "ResidualVarianceModel",
    "centering_terms",
    "cov_estimate",
    "diagnostics",
    "estimate_report",
    "regression_adjustment",
    "residual_variance",
    "var_estimate",
    "var_prob_estimate",
]


class Regime(Enum):
    """Assumption set under which a variance formula is valid."""

    BOTH_CORRECT = "both_correct"
    SELECTION_CORRECT = "selection_correct"
    KH_DOUBLY_ROBUST = "kh_doubly_robust"


class ResidualVarianceModel(Enum):
    CONSTANT = "constant"
    LINEAR_IN_X = "linear_in_x"


# Counters for guard events; variance totals are floored at zero and
# SRSWOR first terms may legitimately come out negative.
diagnostics = {"negative_total": 0, "negative_first_term": 0}


@dataclass(frozen=True)
class CenteringTerms:
    """Per-unit centering vectors feeding the two-part variance form.

    ``pred_center`` is subtracted from the outcome-model predictions on
    sample A, ``outcome_center`` from the observed outcomes on sample B.
    ``adjustment`` is the weighted-regression coefficient used (if any)
    and ``pred_ht_mean`` the HT mean of the predictions over sample A.
    """

    pred_center: np.ndarray
    outcome_center: np.ndarray
    adjustment: np.ndarray | None
    pred_ht_mean: float

    def __post_init__(self):
        for name in ("pred_center", "outcome_center"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not (np.all(np.isfinite(self.pred_center)) and np.all(np.isfinite(self.outcome_center))):
            raise ValidationError("non-finite centering term")


@dataclass(frozen=True)
class EstimateReport:
    """Point estimate with its variance estimate and the centering used."""

    kind: EstimatorKind
    regime: Regime | None
    estimate: float
    variance: float
    centering: CenteringTerms | None


def regression_adjustment(observed: ObservedData, fit: NuisanceFit, *,
                          on_residuals: bool, centered: bool) -> np.ndarray:
    """Weighted-least-squares coefficient that tracks selection-fit error.

    Regresses the outcome (or the outcome-model residual when
    ``on_residuals``) on the selection-model covariates, with weights
    (1 - pi)/pi on the target side and gram weights (1 - pi). When
    ``centered``, the target is first centered at its self-normalized
    inverse-probability mean over sample B.
    """
    cols = fit.spec.columns("selection", observed.n_covariates)
    x = observed.x_b[:, cols]
    pi = check_selection_floor(fit.pi_b(observed.x_b))
    target = observed.y_b - fit.m(observed.x_b) if on_residuals else observed.y_b
    if centered:
        w = 1.0 / pi
        target = target - np.sum(target * w) / np.sum(w)
    n_pop = observed.n_population
    gram = (x * (1.0 - pi)[:, None]).T @ x / n_pop
    rhs = x.T @ ((1.0 - pi) / pi * target) / n_pop
    return solve_spd(gram, rhs, "regression adjustment")


def _adjustment_product(observed, fit, x_rows, adjustment) -> np.ndarray:
    """pi_b(x) * adjustment'x over the given rows (selection columns)."""
    cols = fit.spec.columns("selection", observed.n_covariates)
    return fit.pi_b(x_rows) * (x_rows[:, cols] @ adjustment)


def predictions_a(kind: EstimatorKind, observed: ObservedData, fit: NuisanceFit) -> np.ndarray:
    """Outcome-model predictions on sample A; identically zero for IPW kinds."""
    if kind in IPW_KINDS:
        return np.zeros(observed.n_a)
    return fit.m(observed.x_a)


def centering_terms(kind: EstimatorKind, regime: Regime, observed: ObservedData,
                    fit: NuisanceFit) -> CenteringTerms:
    """Build the centering vectors for a supported (estimator, regime) pair.

    Supported pairs: DR1 x {both_correct, selection_correct, kh_doubly_robust},
    DR2 x {both_correct, selection_correct}, IPW1/IPW2 x selection_correct.
    """
    if regime is Regime.KH_DOUBLY_ROBUST:
        if kind is not EstimatorKind.DR1:
            raise ValidationError("the doubly robust variance regime applies to DR1 only")
        if fit.spec.fit_method is not FitMethod.KIM_HAZIZA:
            raise ValidationError("the doubly robust variance regime requires a Kim-Haziza fit")

    n_a = observed.n_a
    if kind in IPW_KINDS:
        if regime is not Regime.SELECTION_CORRECT:
            raise ValidationError(f"unsupported regime {regime.value} for {kind.value}")
        centered = kind is EstimatorKind.IPW2
        adj = regression_adjustment(observed, fit, on_residuals=False, centered=centered)
        adj_a = _adjustment_product(observed, fit, observed.x_a, adj)
        adj_b = _adjustment_product(observed, fit, observed.x_b, adj)
        shift = point_estimate(EstimatorKind.IPW2, observed, fit) if centered else 0.0
        return CenteringTerms(pred_center=-adj_a, outcome_center=shift + adj_b,
                              adjustment=adj, pred_ht_mean=0.0)

    if kind not in DR_KINDS:
        raise ValidationError(f"no variance regime is defined for {kind.value}")
    m_a = fit.m(observed.x_a)
    m_b = fit.m(observed.x_b)
    m_bar = ht_mean(m_a, observed.pi_a, observed.n_population)

    if regime in (Regime.BOTH_CORRECT, Regime.KH_DOUBLY_ROBUST):
        if kind is EstimatorKind.DR1:
            pred_center = np.zeros(n_a)
        else:
            pred_center = np.full(n_a, m_bar)
        return CenteringTerms(pred_center=pred_center, outcome_center=m_b,
                              adjustment=None, pred_ht_mean=m_bar)

    if regime is not Regime.SELECTION_CORRECT:
        raise ValidationError(f"unsupported regime {regime.value} for {kind.value}")
    centered = kind is EstimatorKind.DR2
    adj = regression_adjustment(observed, fit, on_residuals=True, centered=centered)
    adj_a = _adjustment_product(observed, fit, observed.x_a, adj)
    adj_b = _adjustment_product(observed, fit, observed.x_b, adj)
    if kind is EstimatorKind.DR1:
        return CenteringTerms(pred_center=-adj_a, outcome_center=m_b + adj_b,
                              adjustment=adj, pred_ht_mean=m_bar)
    dr2 = point_estimate(EstimatorKind.DR2, observed, fit)
    return CenteringTerms(pred_center=m_bar - adj_a, outcome_center=m_b + (dr2 - m_bar) + adj_b,
                          adjustment=adj, pred_ht_mean=m_bar)


def residual_variance(observed: ObservedData, fit: NuisanceFit,
                      model: ResidualVarianceModel) -> tuple[np.ndarray, np.ndarray]:
    """Estimate the residual variance function on both samples.

    Returns per-unit values (on sample A, on sample B). The constant model
    uses the mean squared sample-B residual; the linear model least-squares
    fits squared residuals on the outcome covariates and truncates below
    at zero.
    """
    r = observed.y_b - fit.m(observed.x_b)
    if model is ResidualVarianceModel.CONSTANT:
        s2 = float(np.mean(r**2))
        return np.full(observed.n_a, s2), np.full(observed.n_b, s2)
    cols = fit.spec.columns("outcome", observed.n_covariates)
    x_b = observed.x_b[:, cols]
    coef, *_ = np.linalg.lstsq(x_b, r**2, rcond=None)
    s2_a = np.clip(observed.x_a[:, cols] @ coef, 0.0, None)
    s2_b = np.clip(x_b @ coef, 0.0, None)
    return s2_a, s2_b


def var_estimate(kind: EstimatorKind, regime: Regime, observed: ObservedData, fit: NuisanceFit,
                 provider: JointProbProvider, *,
                 sigma_model: ResidualVarianceModel = ResidualVarianceModel.CONSTANT) -> float:
    """Closed-form variance estimate for a reweighted estimator under a regime."""
    terms = centering_terms(kind, regime, observed, fit)
    u = predictions_a(kind, observed, fit) - terms.pred_center
    term1 = ht_var_estimate(u, provider)
    if term1 < 0.0:
        # The ratio form is not guaranteed nonnegative under SRSWOR.
        diagnostics["negative_first_term"] += 1
        if observed.design.kind is DesignKind.POISSON:
            raise AssertionError("negative first variance term under Poisson sampling")
        warnings.warn("negative first variance term under SRSWOR", stacklevel=2)
    pi_b = check_selection_floor(fit.pi_b(observed.x_b))
    n_pop = observed.n_population
    term2 = float(np.sum((1.0 - pi_b) / pi_b**2 * (observed.y_b - terms.outcome_center) ** 2) / n_pop**2)
    correction = 0.0
    if regime is Regime.KH_DOUBLY_ROBUST:
        s2_a, s2_b = residual_variance(observed, fit, sigma_model)
        correction = float((np.sum(s2_a / observed.pi_a) - np.sum(s2_b / pi_b)) / n_pop**2)
    total = term1 + term2 + correction
    if total < 0.0:
        diagnostics["negative_total"] += 1
        total = 0.0
    return total


def var_prob_estimate(kind: EstimatorKind, observed: ObservedData, provider: JointProbProvider) -> float:
    """Variance estimate for the probability-sample estimators (HT or Hajek)."""
    if kind not in PROB_KINDS:
        raise ValidationError(f"{kind.value} is not a probability-sample estimator")
    if observed.y_a is None:
        raise ValidationError("variance of a probability-sample estimator needs the outcome on sample A")
    if kind is EstimatorKind.HT:
        return ht_var_estimate(observed.y_a, provider)
    center = hajek_mean(observed.y_a, observed.pi_a)
    return ht_var_estimate(observed.y_a - center, provider)


def cov_estimate(kind: EstimatorKind, regime: Regime, prob_kind: EstimatorKind,
                 observed: ObservedData, fit: NuisanceFit, provider: JointProbProvider) -> float:
    """Covariance estimate between a reweighted estimator and HT or Hajek.

    Both estimators share sample A through the covariates, so their errors
    correlate; the estimate is the design covariance of the centered
    predictions against the (possibly Hajek-centered) outcomes on sample A.
    """
    if prob_kind not in PROB_KINDS:
        raise ValidationError(f"{prob_kind.value} is not a probability-sample estimator")
    if observed.y_a is None:
        raise ValidationError("covariance with a probability-sample estimator needs the outcome on sample A")
    terms = centering_terms(kind, regime, observed, fit)
    u = predictions_a(kind, observed, fit) - terms.pred_center
    gamma = 0.0 if prob_kind is EstimatorKind.HT else hajek_mean(observed.y_a, observed.pi_a)
    return ht_cov_estimate(u, observed.y_a - gamma, provider)


def estimate_report(kind: EstimatorKind, regime: Regime | None, observed: ObservedData,
                    fit: NuisanceFit | None, provider: JointProbProvider, *,
                    sigma_model: ResidualVarianceModel = ResidualVarianceModel.CONSTANT) -> EstimateReport:
    """Point estimate plus matching variance estimate in one report."""
    estimate = point_estimate(kind, observed, fit)
    if kind in PROB_KINDS:
        return EstimateReport(kind=kind, regime=None, estimate=estimate,
                              variance=var_prob_estimate(kind, observed, provider), centering=None)
    if regime is None:
        raise ValidationError(f"{kind.value} needs a variance regime")
    variance = var_estimate(kind, regime, observed, fit, provider, sigma_model=sigma_model)
    return EstimateReport(kind=kind, regime=regime, estimate=estimate, variance=variance,
                          centering=centering_terms(kind, regime, observed, fit))
