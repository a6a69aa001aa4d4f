"""Point estimators of the population mean.

Six estimators are provided. HT and Hajek use outcome data from the
probability sample alone. IPW1/IPW2 reweight the nonprobability sample by
fitted inverse selection probabilities; DR1/DR2 add an outcome-model
correction and stay consistent when either nuisance model is correct.
The "2" variants self-normalize each weighted sum by its estimated
population size instead of dividing by N.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from .designs import hajek_mean, ht_mean
from .nuisance import NuisanceFit, check_selection_floor
from .types import ObservedData, ValidationError

__all__ = ["EstimatorKind", "point_estimate"]


class EstimatorKind(Enum):
    HT = "HT"
    HAJEK = "Hajek"
    IPW1 = "IPW1"
    IPW2 = "IPW2"
    DR1 = "DR1"
    DR2 = "DR2"


PROB_KINDS = (EstimatorKind.HT, EstimatorKind.HAJEK)
IPW_KINDS = (EstimatorKind.IPW1, EstimatorKind.IPW2)
DR_KINDS = (EstimatorKind.DR1, EstimatorKind.DR2)


def point_estimate(kind: EstimatorKind, observed: ObservedData, fit: NuisanceFit | None = None) -> float:
    """Evaluate one point estimator of the population mean.

    HT/Hajek require the outcome on sample A; IPW kinds require a fitted
    selection model and DR kinds a full nuisance fit.
    """
    n_pop = observed.n_population
    if kind in PROB_KINDS:
        if observed.y_a is None:
            raise ValidationError(f"{kind.value} needs the outcome on sample A")
        if kind is EstimatorKind.HT:
            return ht_mean(observed.y_a, observed.pi_a, n_pop)
        return hajek_mean(observed.y_a, observed.pi_a)

    if fit is None:
        raise ValidationError(f"{kind.value} needs a nuisance fit")
    pi_b = check_selection_floor(fit.pi_b(observed.x_b))

    if kind is EstimatorKind.IPW1:
        return float(np.sum(observed.y_b / pi_b) / n_pop)
    if kind is EstimatorKind.IPW2:
        return hajek_mean(observed.y_b, pi_b)

    m_a = fit.m(observed.x_a)
    m_b = fit.m(observed.x_b)
    if kind is EstimatorKind.DR1:
        return float((np.sum(m_a / observed.pi_a) + np.sum((observed.y_b - m_b) / pi_b)) / n_pop)
    if kind is EstimatorKind.DR2:
        n_hat_a = float(np.sum(1.0 / observed.pi_a))
        n_hat_b = float(np.sum(1.0 / pi_b))
        return float(np.sum(m_a / observed.pi_a) / n_hat_a + np.sum((observed.y_b - m_b) / pi_b) / n_hat_b)
    raise ValidationError(f"unknown estimator kind {kind}")
