"""Shared data model: populations, observed samples, model specifications.

All array fields are converted to float64 and marked read-only at
construction, so every object here is immutable and safe to share across
threads or worker processes.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "DesignDescriptor",
    "DesignKind",
    "FinitePopulation",
    "FitMethod",
    "ModelSpec",
    "ObservedData",
    "OutcomeFamily",
    "UnitRecord",
    "ValidationError",
    "validate",
]


class ValidationError(ValueError):
    """Input data violates a structural or value invariant."""


class DesignKind(Enum):
    """Probability-sample designs with closed-form pairwise inclusion probabilities."""

    POISSON = "poisson"
    SRSWOR = "srswor"


class OutcomeFamily(Enum):
    LINEAR_GAUSSIAN = "linear_gaussian"
    LOGISTIC_BINARY = "logistic_binary"


class FitMethod(Enum):
    PSEUDO_ML = "pseudo_ml"
    CALIBRATION = "calibration"
    KIM_HAZIZA = "kim_haziza"


def _frozen(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


def _set(obj, name, value) -> None:
    object.__setattr__(obj, name, value)


@dataclass(frozen=True)
class DesignDescriptor:
    """How the probability sample was drawn.

    ``n`` is the fixed sample size and is required (and only meaningful)
    for ``SRSWOR``.
    """

    kind: DesignKind
    n: int | None = None

    def __post_init__(self):
        if self.kind is DesignKind.SRSWOR:
            if self.n is None or int(self.n) < 2:
                raise ValidationError("SRSWOR design requires a fixed sample size n > 1")
            _set(self, "n", int(self.n))
        elif self.n is not None:
            raise ValidationError("Poisson design takes no fixed sample size")

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "n": self.n}

    @classmethod
    def from_dict(cls, d: dict) -> "DesignDescriptor":
        return cls(kind=DesignKind(d["kind"]), n=d.get("n"))


@dataclass(frozen=True)
class UnitRecord:
    """One population unit: covariates (with explicit leading intercept),
    auxiliary covariates, and an optionally missing outcome."""

    x: tuple[float, ...]
    z: tuple[float, ...] = ()
    y: float | None = None

    def __post_init__(self):
        _set(self, "x", tuple(float(v) for v in self.x))
        _set(self, "z", tuple(float(v) for v in self.z))
        if len(self.x) == 0:
            raise ValidationError("unit covariate vector is empty")
        if self.x[0] != 1.0:
            raise ValidationError("first covariate entry must be the intercept (1)")
        if not all(np.isfinite(self.x)) or not all(np.isfinite(self.z)):
            raise ValidationError("non-finite covariate entry")
        if self.y is not None:
            _set(self, "y", float(self.y))

    def to_dict(self) -> dict:
        return {"x": list(self.x), "z": list(self.z), "y": self.y}

    @classmethod
    def from_dict(cls, d: dict) -> "UnitRecord":
        return cls(x=tuple(d["x"]), z=tuple(d.get("z", ())), y=d.get("y"))


@dataclass(frozen=True)
class FinitePopulation:
    """The fixed frame plus outcomes; only the simulator ever sees this.

    ``pi_a`` holds the first-order probability of entering the probability
    sample and ``pi_b_true`` the true (in practice unknown) probability of
    opting into the nonprobability sample.
    """

    x: np.ndarray          # (N, p), x[:, 0] == 1
    y: np.ndarray          # (N,)
    pi_a: np.ndarray       # (N,)
    pi_b_true: np.ndarray  # (N,)
    design: DesignDescriptor
    z: np.ndarray | None = None  # (N, q) auxiliary columns, carried but unused

    def __post_init__(self):
        x = _frozen(self.x)
        if x.ndim != 2:
            raise ValidationError("population covariates must be a 2-d array")
        n = x.shape[0]
        _set(self, "x", x)
        for name in ("y", "pi_a", "pi_b_true"):
            arr = _frozen(getattr(self, name))
            if arr.shape != (n,):
                raise ValidationError(f"population field {name} has length {arr.shape}, expected ({n},)")
            _set(self, name, arr)
        z = self.z
        _set(self, "z", _frozen(np.zeros((n, 0)) if z is None else z))
        if self.z.ndim != 2 or self.z.shape[0] != n:
            raise ValidationError("auxiliary covariates must be (N, q)")
        if not np.all(np.isfinite(self.x)) or not np.all(np.isfinite(self.y)):
            raise ValidationError("non-finite population entry")
        if not np.all(self.x[:, 0] == 1.0):
            raise ValidationError("first covariate column must be the intercept")
        if np.any(self.pi_a <= 0.0) or np.any(self.pi_a > 1.0):
            raise ValidationError("sampling probability outside (0, 1]")
        if np.any(self.pi_b_true <= 0.0) or np.any(self.pi_b_true >= 1.0):
            raise ValidationError("true selection probability outside (0, 1)")

    @property
    def size(self) -> int:
        return self.x.shape[0]

    def unit(self, i: int) -> UnitRecord:
        return UnitRecord(x=tuple(self.x[i]), z=tuple(self.z[i]), y=float(self.y[i]))

    def to_dict(self) -> dict:
        return {
            "x": self.x.tolist(),
            "y": self.y.tolist(),
            "pi_a": self.pi_a.tolist(),
            "pi_b_true": self.pi_b_true.tolist(),
            "design": self.design.to_dict(),
            "z": self.z.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FinitePopulation":
        return cls(
            x=d["x"],
            y=d["y"],
            pi_a=d["pi_a"],
            pi_b_true=d["pi_b_true"],
            design=DesignDescriptor.from_dict(d["design"]),
            z=d.get("z"),
        )


@dataclass(frozen=True)
class ObservedData:
    """What an analyst actually has.

    Sample A rows carry covariates, known inclusion probabilities and,
    when the outcome was collected there, outcome values. Sample B rows
    always carry the outcome. Covariate matrices include the intercept
    column; per-model column masks live in :class:`ModelSpec`.
    """

    n_population: int
    design: DesignDescriptor
    x_a: np.ndarray            # (n_a, p)
    pi_a: np.ndarray           # (n_a,)
    x_b: np.ndarray            # (n_b, p)
    y_b: np.ndarray            # (n_b,)
    y_a: np.ndarray | None = None

    def __post_init__(self):
        _set(self, "n_population", int(self.n_population))
        x_a = _frozen(self.x_a)
        x_b = _frozen(self.x_b)
        if x_a.ndim != 2 or x_b.ndim != 2:
            raise ValidationError("sample covariates must be 2-d arrays")
        if x_a.shape[1] != x_b.shape[1]:
            raise ValidationError(
                f"covariate dimension mismatch: sample A has {x_a.shape[1]}, sample B has {x_b.shape[1]}"
            )
        _set(self, "x_a", x_a)
        _set(self, "x_b", x_b)
        pi_a = _frozen(self.pi_a)
        if pi_a.shape != (x_a.shape[0],):
            raise ValidationError("pi_a length does not match sample A")
        _set(self, "pi_a", pi_a)
        y_b = _frozen(self.y_b)
        if y_b.shape != (x_b.shape[0],):
            raise ValidationError("y length does not match sample B")
        _set(self, "y_b", y_b)
        if self.y_a is not None:
            y_a = _frozen(self.y_a)
            if y_a.shape != (x_a.shape[0],):
                raise ValidationError("y length does not match sample A")
            _set(self, "y_a", y_a)

    @property
    def n_a(self) -> int:
        return self.x_a.shape[0]

    @property
    def n_b(self) -> int:
        return self.x_b.shape[0]

    @property
    def n_covariates(self) -> int:
        return self.x_a.shape[1]

    def to_dict(self) -> dict:
        return {
            "n_population": self.n_population,
            "design": self.design.to_dict(),
            "x_a": self.x_a.tolist(),
            "pi_a": self.pi_a.tolist(),
            "y_a": None if self.y_a is None else self.y_a.tolist(),
            "x_b": self.x_b.tolist(),
            "y_b": self.y_b.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ObservedData":
        return cls(
            n_population=d["n_population"],
            design=DesignDescriptor.from_dict(d["design"]),
            x_a=d["x_a"],
            pi_a=d["pi_a"],
            x_b=d["x_b"],
            y_b=d["y_b"],
            y_a=d.get("y_a"),
        )


@dataclass(frozen=True)
class ModelSpec:
    """Analysis-model structure for the two nuisance models.

    Selection into Sample B is always modelled as logistic in the chosen
    covariate columns. ``outcome_cols``/``selection_cols`` are tuples of
    column indices into the stored covariate matrix (0 is the intercept);
    ``None`` means all columns. The Kim-Haziza method requires both models
    to use the same columns.
    """

    outcome_family: OutcomeFamily = OutcomeFamily.LINEAR_GAUSSIAN
    fit_method: FitMethod = FitMethod.PSEUDO_ML
    outcome_cols: tuple[int, ...] | None = None
    selection_cols: tuple[int, ...] | None = None

    def __post_init__(self):
        for name in ("outcome_cols", "selection_cols"):
            cols = getattr(self, name)
            if cols is not None:
                _set(self, name, tuple(int(c) for c in cols))
        if self.fit_method is FitMethod.KIM_HAZIZA and self.outcome_cols != self.selection_cols:
            raise ValidationError("Kim-Haziza fitting requires identical covariate columns in both models")

    def columns(self, which: str, n_covariates: int) -> np.ndarray:
        cols = self.outcome_cols if which == "outcome" else self.selection_cols
        if cols is None:
            return np.arange(n_covariates)
        idx = np.asarray(cols, dtype=int)
        if idx.size == 0 or np.any(idx < 0) or np.any(idx >= n_covariates):
            raise ValidationError(f"{which} column mask out of range for {n_covariates} covariates")
        return idx

    def to_dict(self) -> dict:
        return {
            "outcome_family": self.outcome_family.value,
            "fit_method": self.fit_method.value,
            "outcome_cols": None if self.outcome_cols is None else list(self.outcome_cols),
            "selection_cols": None if self.selection_cols is None else list(self.selection_cols),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        def _cols(v):
            return None if v is None else tuple(v)

        return cls(
            outcome_family=OutcomeFamily(d.get("outcome_family", "linear_gaussian")),
            fit_method=FitMethod(d.get("fit_method", "pseudo_ml")),
            outcome_cols=_cols(d.get("outcome_cols")),
            selection_cols=_cols(d.get("selection_cols")),
        )


def validate(observed: ObservedData) -> ObservedData:
    """Check every value-level invariant of :class:`ObservedData`.

    Returns the input object unchanged when everything holds, so the
    operation is idempotent. Raises :class:`ValidationError` on the first
    violation found.
    """
    n_pop = observed.n_population
    p = observed.n_covariates
    if observed.n_a == 0 or observed.n_b == 0:
        raise ValidationError("empty sample")
    if n_pop < max(observed.n_a, observed.n_b):
        raise ValidationError("population size smaller than a sample size")
    if np.any(observed.pi_a <= 0.0):
        raise ValidationError("nonpositive inclusion probability in sample A")
    if np.any(observed.pi_a > 1.0):
        raise ValidationError("inclusion probability above 1 in sample A")
    for label, x in (("A", observed.x_a), ("B", observed.x_b)):
        if not np.all(np.isfinite(x)):
            raise ValidationError(f"non-finite covariate in sample {label}")
        if not np.all(x[:, 0] == 1.0):
            raise ValidationError(f"first covariate column must be the intercept in sample {label}")
    if not np.all(np.isfinite(observed.y_b)):
        raise ValidationError("missing or non-finite outcome on sample B")
    if observed.y_a is not None and not np.all(np.isfinite(observed.y_a)):
        raise ValidationError("non-finite outcome on sample A")
    if observed.n_a < p + 1 or observed.n_b < p + 1:
        raise ValidationError(
            f"underdetermined fit: sample sizes ({observed.n_a}, {observed.n_b}) "
            f"below covariate dimension {p} + 1"
        )
    if observed.design.kind is DesignKind.SRSWOR:
        if observed.design.n != observed.n_a:
            raise ValidationError("SRSWOR design size does not match sample A size")
        if observed.design.n >= n_pop:
            raise ValidationError("SRSWOR design size must be below the population size")
    return observed
