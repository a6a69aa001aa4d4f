"""Configuration-driven command line front end.

Two subcommands, both driven by a single declarative YAML file:

* ``estimate`` reads sample CSVs, validates them, fits the nuisance
  models once, and writes every requested point estimate, variance,
  covariance and pooled report (human-readable table plus JSON).
* ``simulate`` runs a repeated-sampling study and writes the summary as
  CSV plus a run manifest.

CSV schemas (intercept never stored; x_0 = 1 is added internally):

* ``sample_a.csv``: id, x_1..x_p, pi_a[, y]
* ``sample_b.csv``: id, x_1..x_p, y

Exit codes: 0 success, 2 validation failure, 3 solver/simulation failure,
4 I/O or parse failure. All numbers are serialized with 17 significant
digits, so re-ingestion is lossless.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml
from scipy.stats import norm

from . import __version__
from .combiner import PooledReport, pool
from .designs import provider_for
from .estimators import EstimatorKind, PROB_KINDS, point_estimate
from .nuisance import NuisanceFit, SolverError, fit_nuisance
from .simulate import MonteCarloSummary, ScenarioConfig, SimulationError, run_replications
from .types import (
    DesignDescriptor,
    DesignKind,
    FitMethod,
    ModelSpec,
    ObservedData,
    OutcomeFamily,
    ValidationError,
    validate,
)
from .uncertainty import Regime, ResidualVarianceModel, cov_estimate, estimate_report, var_prob_estimate

__all__ = ["CsvParseError", "RunConfig", "console_main", "main", "read_samples",
           "run_estimate", "run_simulate", "write_sample_csvs"]

LOCK_NAME = ".lock"

SUMMARY_COLUMNS = (
    "name", "row_type", "n_used", "mc_mean", "mc_bias", "mc_bias_se",
    "emp_variance", "emp_variance_se", "mean_var_estimate", "mean_var_estimate_se",
    "rel_var_bias", "coverage", "coverage_se", "emp_cov", "emp_cov_se",
    "mean_cov_estimate", "mean_cov_estimate_se", "rel_cov_bias", "mean_w",
)


class CsvParseError(Exception):
    """A CSV input could not be parsed; the message names file and line."""


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.17g}"


def _kind(name: str) -> EstimatorKind:
    for kind in EstimatorKind:
        if kind.value.lower() == str(name).lower():
            return kind
    raise ValidationError(f"unknown estimator {name!r}")


def _regime(name: str) -> Regime:
    try:
        return Regime(str(name))
    except ValueError:
        raise ValidationError(f"unknown regime {name!r}") from None


@dataclass(frozen=True)
class RunConfig:
    """Parsed configuration for one CLI run."""

    mode: str
    output_dir: Path
    level: float = 0.95
    # estimate mode
    sample_a_path: Path | None = None
    sample_b_path: Path | None = None
    n_population: int | None = None
    design: DesignDescriptor | None = None
    model: ModelSpec | None = None
    sigma_model: ResidualVarianceModel = ResidualVarianceModel.CONSTANT
    points: tuple[EstimatorKind, ...] = ()
    variances: tuple[tuple[EstimatorKind, Regime], ...] = ()
    covariances: tuple[tuple[EstimatorKind, Regime, EstimatorKind], ...] = ()
    pooled: tuple[tuple[EstimatorKind, Regime, EstimatorKind], ...] = ()
    # simulate mode
    scenario: ScenarioConfig | None = None
    parallel: bool = False
    max_workers: int | None = None


def _mask_from_config(cols) -> tuple[int, ...] | None:
    """Translate 1-based covariate numbers (x_1..x_p) to internal indices; intercept always kept."""
    if cols is None:
        return None
    return (0,) + tuple(int(c) for c in cols)


def load_config(path: str | Path, mode: str) -> RunConfig:
    with open(path) as fh:
        raw = yaml.safe_load(fh)
    if not isinstance(raw, dict):
        raise ValidationError("config file must hold a mapping")
    cfg_mode = raw.get("mode", mode)
    if cfg_mode != mode:
        raise ValidationError(f"config is for mode {cfg_mode!r}, command expects {mode!r}")
    output_dir = Path(raw.get("output_dir", "out"))
    level = float(raw.get("level", 0.95))
    if not 0.0 < level < 1.0:
        raise ValidationError("confidence level outside (0, 1)")

    if mode == "simulate":
        if "scenario" not in raw:
            raise ValidationError("simulate config needs a 'scenario' section")
        scenario = ScenarioConfig.from_dict(raw["scenario"])
        return RunConfig(mode=mode, output_dir=output_dir, level=level, scenario=scenario,
                         parallel=bool(raw.get("parallel", False)),
                         max_workers=raw.get("max_workers"))

    inputs = raw.get("inputs", {})
    for key in ("sample_a", "sample_b", "n_population"):
        if key not in inputs:
            raise ValidationError(f"estimate config needs inputs.{key}")
    design_raw = raw.get("design", {})
    design = DesignDescriptor(kind=DesignKind(design_raw.get("kind", "poisson")),
                              n=design_raw.get("n"))
    analysis = raw.get("analysis", {})
    model = ModelSpec(
        outcome_family=OutcomeFamily(analysis.get("outcome_family", "linear_gaussian")),
        fit_method=FitMethod(analysis.get("fit_method", "pseudo_ml")),
        outcome_cols=_mask_from_config(analysis.get("outcome_cols")),
        selection_cols=_mask_from_config(analysis.get("selection_cols")),
    )
    est = raw.get("estimators", {})
    points = tuple(_kind(k) for k in est.get("points", ()))
    variances = tuple((_kind(v["kind"]), _regime(v["regime"])) for v in est.get("variances", ()))
    covariances = tuple((_kind(v["kind"]), _regime(v["regime"]), _kind(v["prob"]))
                        for v in est.get("covariances", ()))
    pooled = tuple((_kind(v["kind"]), _regime(v["regime"]), _kind(v["prob"]))
                   for v in est.get("pooled", ()))
    return RunConfig(
        mode=mode, output_dir=output_dir, level=level,
        sample_a_path=Path(inputs["sample_a"]), sample_b_path=Path(inputs["sample_b"]),
        n_population=int(inputs["n_population"]), design=design, model=model,
        sigma_model=ResidualVarianceModel(analysis.get("sigma_model", "constant")),
        points=points, variances=variances, covariances=covariances, pooled=pooled,
    )


# ---------------------------------------------------------------------------
# CSV input and output


def _read_rows(path: Path, expected_tail: tuple[str, ...], optional_tail: tuple[str, ...] = ()):
    """Parse a sample CSV; returns (x matrix without intercept, tail columns dict)."""
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise CsvParseError(f"{path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvParseError(f"{path} line 1: empty file") from None
        header = [h.strip() for h in header]
        if not header or header[0] != "id":
            raise CsvParseError(f"{path} line 1: first column must be 'id'")
        n_x = 0
        while 1 + n_x < len(header) and header[1 + n_x] == f"x_{n_x + 1}":
            n_x += 1
        if n_x == 0:
            raise CsvParseError(f"{path} line 1: expected covariate columns x_1..x_p")
        tail = header[1 + n_x:]
        want = list(expected_tail)
        if tuple(tail) != expected_tail and tuple(tail) != expected_tail + optional_tail:
            raise CsvParseError(
                f"{path} line 1: trailing columns {tail} do not match {want} (+ optional {list(optional_tail)})")
        has_optional = tuple(tail) == expected_tail + optional_tail
        x_rows, tails = [], {name: [] for name in tail}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise CsvParseError(f"{path} line {lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                values = [float(v) for v in row[1:]]
            except ValueError as exc:
                raise CsvParseError(f"{path} line {lineno}: {exc}") from None
            x_rows.append(values[:n_x])
            for name, v in zip(tail, values[n_x:]):
                tails[name].append((lineno, v))
        if not x_rows:
            raise CsvParseError(f"{path}: no data rows")
    return np.asarray(x_rows), tails, has_optional


def read_samples(config: RunConfig) -> ObservedData:
    """Read and validate both sample CSVs into an ObservedData."""
    x_a_raw, tails_a, has_y_a = _read_rows(config.sample_a_path, ("pi_a",), ("y",))
    x_b_raw, tails_b, _ = _read_rows(config.sample_b_path, ("y",))
    if x_a_raw.shape[1] != x_b_raw.shape[1]:
        raise ValidationError(
            f"covariate dimension mismatch: sample A has {x_a_raw.shape[1]}, sample B has {x_b_raw.shape[1]}")
    for lineno, v in tails_a["pi_a"]:
        if not 0.0 < v <= 1.0:
            raise ValidationError(
                f"{config.sample_a_path} line {lineno}: inclusion probability {v:g} outside (0, 1]")
    intercept_a = np.ones((x_a_raw.shape[0], 1))
    intercept_b = np.ones((x_b_raw.shape[0], 1))
    observed = ObservedData(
        n_population=config.n_population,
        design=config.design,
        x_a=np.hstack([intercept_a, x_a_raw]),
        pi_a=np.asarray([v for _, v in tails_a["pi_a"]]),
        y_a=np.asarray([v for _, v in tails_a["y"]]) if has_y_a else None,
        x_b=np.hstack([intercept_b, x_b_raw]),
        y_b=np.asarray([v for _, v in tails_b["y"]]),
    )
    return validate(observed)


def write_sample_csvs(observed: ObservedData, directory: str | Path) -> tuple[Path, Path]:
    """Export an ObservedData to the CLI's CSV schemas (17 significant digits)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    p = observed.n_covariates - 1
    path_a = directory / "sample_a.csv"
    path_b = directory / "sample_b.csv"
    with open(path_a, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["id"] + [f"x_{j}" for j in range(1, p + 1)] + ["pi_a"] + (["y"] if observed.y_a is not None else [])
        writer.writerow(header)
        for i in range(observed.n_a):
            row = [str(i + 1)] + [_fmt(v) for v in observed.x_a[i, 1:]] + [_fmt(observed.pi_a[i])]
            if observed.y_a is not None:
                row.append(_fmt(observed.y_a[i]))
            writer.writerow(row)
    with open(path_b, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id"] + [f"x_{j}" for j in range(1, p + 1)] + ["y"])
        for i in range(observed.n_b):
            writer.writerow([str(i + 1)] + [_fmt(v) for v in observed.x_b[i, 1:]] + [_fmt(observed.y_b[i])])
    return path_a, path_b


# ---------------------------------------------------------------------------
# Reports


def build_estimate_report(config: RunConfig, observed: ObservedData) -> dict:
    """Compute every requested quantity on validated data; one nuisance fit feeds all of them."""
    provider = provider_for(observed)
    needs_fit = any(k not in PROB_KINDS for k in config.points) or config.variances \
        or config.covariances or config.pooled
    fit: NuisanceFit | None = fit_nuisance(observed, config.model) if needs_fit else None

    report: dict = {
        "mode": "estimate",
        "n_population": observed.n_population,
        "design": config.design.to_dict(),
        "model": config.model.to_dict(),
        "level": config.level,
        "points": [],
        "variances": [],
        "covariances": [],
        "pooled": [],
    }
    for kind in config.points:
        report["points"].append({"estimator": kind.value,
                                 "estimate": point_estimate(kind, observed, fit)})
    z = float(norm.ppf(0.5 * (1.0 + config.level)))
    for kind, regime in config.variances:
        er = estimate_report(kind, regime, observed, fit, provider, sigma_model=config.sigma_model)
        half = z * float(np.sqrt(max(er.variance, 0.0)))
        report["variances"].append({
            "estimator": kind.value, "regime": regime.value,
            "estimate": er.estimate, "variance": er.variance,
            "ci_low": er.estimate - half, "ci_high": er.estimate + half,
        })
    for kind in config.points:
        if kind in PROB_KINDS and observed.y_a is not None:
            var = var_prob_estimate(kind, observed, provider)
            est = point_estimate(kind, observed)
            half = z * float(np.sqrt(max(var, 0.0)))
            report["variances"].append({
                "estimator": kind.value, "regime": None,
                "estimate": est, "variance": var,
                "ci_low": est - half, "ci_high": est + half,
            })
    for kind, regime, prob in config.covariances:
        report["covariances"].append({
            "estimator": kind.value, "regime": regime.value, "prob_estimator": prob.value,
            "covariance": cov_estimate(kind, regime, prob, observed, fit, provider),
        })
    for kind, regime, prob in config.pooled:
        pooled: PooledReport = pool(observed, fit, kind, regime, prob, config.level,
                                    sigma_model=config.sigma_model)
        entry = {"estimator": kind.value, "regime": regime.value, "prob_estimator": prob.value}
        entry.update(pooled.to_dict())
        report["pooled"].append(entry)
    return report


def _report_text(report: dict) -> str:
    lines = [f"surveyblend estimate report (level {_fmt(report['level'])})", ""]
    if report["points"]:
        lines.append("point estimates")
        for row in report["points"]:
            lines.append(f"  {row['estimator']:<6} {_fmt(row['estimate'])}")
        lines.append("")
    if report["variances"]:
        lines.append("variance estimates")
        for row in report["variances"]:
            regime = row["regime"] or "-"
            lines.append(f"  {row['estimator']:<6} {regime:<20} est {_fmt(row['estimate'])} "
                         f"var {_fmt(row['variance'])} ci [{_fmt(row['ci_low'])}, {_fmt(row['ci_high'])}]")
        lines.append("")
    if report["covariances"]:
        lines.append("covariances with probability-sample estimators")
        for row in report["covariances"]:
            lines.append(f"  {row['estimator']}/{row['regime']} ~ {row['prob_estimator']}: "
                         f"{_fmt(row['covariance'])}")
        lines.append("")
    if report["pooled"]:
        lines.append("pooled estimates")
        for row in report["pooled"]:
            lines.append(f"  {row['estimator']}/{row['regime']} + {row['prob_estimator']}: "
                         f"w {_fmt(row['w'])} est {_fmt(row['pooled_estimate'])} "
                         f"var {_fmt(row['pooled_variance'])} "
                         f"ci [{_fmt(row['ci_low'])}, {_fmt(row['ci_high'])}]"
                         + (" (fallback weight)" if row["fallback_used"] else ""))
        lines.append("")
    return "\n".join(lines)


def summary_to_csv(summary: MonteCarloSummary, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_COLUMNS)
        for row in summary.rows:
            writer.writerow([_fmt(getattr(row, c)) if c not in ("name", "row_type") else getattr(row, c)
                             for c in SUMMARY_COLUMNS])


# ---------------------------------------------------------------------------
# Run modes


class _OutputLock:
    """One run per output directory, enforced with an exclusive lock file."""

    def __init__(self, directory: Path):
        self.path = directory / LOCK_NAME
        self.fd: int | None = None

    def __enter__(self):
        try:
            self.fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise CsvParseError(
                f"{self.path}: lock file exists; another run owns this output directory") from None
        os.write(self.fd, str(os.getpid()).encode())
        return self

    def __exit__(self, *exc):
        if self.fd is not None:
            os.close(self.fd)
            self.path.unlink(missing_ok=True)
        return False


def run_estimate(config: RunConfig) -> dict:
    """Estimate mode: CSVs in, report files out. Returns the report dict."""
    config.output_dir.mkdir(parents=True, exist_ok=True)
    with _OutputLock(config.output_dir):
        observed = read_samples(config)
        report = build_estimate_report(config, observed)
        with open(config.output_dir / "report.json", "w") as fh:
            json.dump(report, fh, indent=2)
            fh.write("\n")
        (config.output_dir / "report.txt").write_text(_report_text(report))
    return report


def run_simulate(config: RunConfig) -> MonteCarloSummary:
    """Simulate mode: scenario in, summary.csv and manifest.json out."""
    config.output_dir.mkdir(parents=True, exist_ok=True)
    with _OutputLock(config.output_dir):
        started = time.time()
        summary = run_replications(config.scenario, parallel=config.parallel,
                                   max_workers=config.max_workers)
        summary_to_csv(summary, config.output_dir / "summary.csv")
        manifest = {
            "mode": "simulate",
            "scenario": config.scenario.to_dict(),
            "seed": config.scenario.seed,
            "parallel": config.parallel,
            "n_replicates": summary.n_replicates,
            "n_failed": summary.n_failed,
            "y_bar_mean": summary.y_bar_mean,
            "versions": {
                "surveyblend": __version__,
                "python": sys.version.split()[0],
                "numpy": np.__version__,
            },
            "wall_time_seconds": time.time() - started,
        }
        with open(config.output_dir / "manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2)
            fh.write("\n")
    return summary


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="surveyblend",
                                     description="Blend nonprobability and probability survey samples.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("estimate", "estimate from sample CSVs"),
                            ("simulate", "run a repeated-sampling study")):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, help="YAML configuration file")
        cmd.add_argument("--output-dir", default=None, help="override the configured output directory")
        if name == "simulate":
            cmd.add_argument("--parallel", action="store_true", help="run replicates in parallel")
            cmd.add_argument("--workers", type=int, default=None, help="worker process count")
    args = parser.parse_args(argv)

    try:
        config = load_config(args.config, args.command)
        if args.output_dir is not None:
            config = dataclasses.replace(config, output_dir=Path(args.output_dir))
        if args.command == "estimate":
            run_estimate(config)
        else:
            if getattr(args, "parallel", False):
                config = dataclasses.replace(config, parallel=True, max_workers=args.workers)
            run_simulate(config)
        return 0
    except (ValidationError, KeyError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2
    except (SolverError, SimulationError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3
    except (CsvParseError, OSError, yaml.YAMLError) as exc:
        print(f"input/output error: {exc}", file=sys.stderr)
        return 4


def console_main() -> None:
    sys.exit(main())
