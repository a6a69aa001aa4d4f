"""Optimal pooling of a reweighted estimate with the probability-sample estimate.

The pooled estimator is (1 - w) * est_prob + w * est_dr over real weights w.
Its variance is quadratic in w,

    (1 - w)^2 var_p + 2 (1 - w) w cov + w^2 var_dr,

minimized at w = (var_p - cov) / (var_p + var_dr - 2 cov). The weight is
deliberately not clipped to [0, 1]; the class ranges over all real w. A
degenerate denominator triggers a fallback to whichever input estimator
has the smaller variance. The pooled variance treats the estimated weight
as known, which is first-order exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .designs import provider_for
from .estimators import EstimatorKind, point_estimate
from .nuisance import NuisanceFit
from .types import ObservedData, ValidationError
from .uncertainty import Regime, ResidualVarianceModel, cov_estimate, var_estimate, var_prob_estimate

__all__ = ["PooledReport", "combine", "optimal_weight", "pool", "pooled_variance"]

_DEGENERATE_EPS = 1e-10


@dataclass(frozen=True)
class PooledReport:
    """Weight, pooled point estimate and variance, and the pooled CI."""

    w: float
    pooled_estimate: float
    pooled_variance: float
    ci_low: float
    ci_high: float
    est_prob: float
    var_prob: float
    est_dr: float
    var_dr: float
    cov: float
    level: float
    fallback_used: bool

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in (
            "w", "pooled_estimate", "pooled_variance", "ci_low", "ci_high",
            "est_prob", "var_prob", "est_dr", "var_dr", "cov", "level", "fallback_used")}


def _weight(var_p: float, var_dr: float, cov: float) -> tuple[float, bool]:
    if var_p < 0.0 or var_dr < 0.0:
        raise ValidationError("negative input variance")
    denom = var_p + var_dr - 2.0 * cov
    if denom <= _DEGENERATE_EPS * (var_p + var_dr):
        return (1.0 if var_dr < var_p else 0.0), True
    return (var_p - cov) / denom, False


def optimal_weight(var_p: float, var_dr: float, cov: float) -> float:
    """Variance-minimizing pooling weight on the reweighted estimate."""
    w, _ = _weight(var_p, var_dr, cov)
    return w


def pooled_variance(w: float, var_p: float, var_dr: float, cov: float) -> float:
    """Variance of the pooled estimator at a fixed weight."""
    return (1.0 - w) ** 2 * var_p + 2.0 * (1.0 - w) * w * cov + w**2 * var_dr


def combine(est_prob: float, var_prob: float, est_dr: float, var_dr: float, cov: float,
            level: float = 0.95) -> PooledReport:
    """Pool two point estimates given their variances and covariance."""
    if not 0.0 < level < 1.0:
        raise ValidationError("confidence level outside (0, 1)")
    w, fallback = _weight(var_prob, var_dr, cov)
    estimate = (1.0 - w) * est_prob + w * est_dr
    variance = pooled_variance(w, var_prob, var_dr, cov)
    if not fallback:
        # Local optimality of the closed-form weight; a quadratic with
        # positive curvature cannot dip below its stationary point.
        scale = abs(variance) + var_prob + var_dr
        for other in (0.0, 1.0, w - 0.01, w + 0.01):
            assert variance <= pooled_variance(other, var_prob, var_dr, cov) + 1e-12 * scale
    variance = max(variance, 0.0)
    z = float(norm.ppf(0.5 * (1.0 + level)))
    half = z * float(np.sqrt(variance))
    return PooledReport(
        w=w, pooled_estimate=estimate, pooled_variance=variance,
        ci_low=estimate - half, ci_high=estimate + half,
        est_prob=est_prob, var_prob=var_prob, est_dr=est_dr, var_dr=var_dr, cov=cov,
        level=level, fallback_used=fallback,
    )


def pool(observed: ObservedData, fit: NuisanceFit, kind_dr: EstimatorKind, regime: Regime,
         prob_kind: EstimatorKind, level: float = 0.95, *,
         sigma_model: ResidualVarianceModel = ResidualVarianceModel.CONSTANT) -> PooledReport:
    """Full pooling pipeline from observed data to a PooledReport."""
    provider = provider_for(observed)
    est_p = point_estimate(prob_kind, observed)
    var_p = var_prob_estimate(prob_kind, observed, provider)
    est_dr = point_estimate(kind_dr, observed, fit)
    var_dr = var_estimate(kind_dr, regime, observed, fit, provider, sigma_model=sigma_model)
    cov = cov_estimate(kind_dr, regime, prob_kind, observed, fit, provider)
    return combine(est_p, var_p, est_dr, var_dr, cov, level)
