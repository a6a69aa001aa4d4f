#!/usr/bin/env python3
"""Run the default desk-scale repeated-sampling study and print the summary.

Population 10^4, expected nonprobability sample around 1000, probability
sample around 500 under Poisson sampling, 1000 replicates. Evaluates the
doubly robust estimators with variances, the covariance with the Hajek
estimator, and the pooled estimator.
"""

import argparse
import sys
import time

from surveyblend import (
    Covariate,
    EstimatorKind,
    EvalPlan,
    Regime,
    ScenarioConfig,
    run_replications,
)

K = EstimatorKind
R = Regime


def default_scenario(replicates: int, seed: int) -> ScenarioConfig:
    return ScenarioConfig(
        n_population=10_000,
        covariates=(Covariate("normal"), Covariate("normal")),
        beta_true=(1.0, 1.0, 1.0),
        alpha_true=(-2.35, 0.5, 0.5),
        noise_sd=1.0,
        sample_a_size=500,
        pi_a_coef=(0.0, 0.4, 0.0),
        replicates=replicates,
        plan=EvalPlan(
            prob_points=(K.HT, K.HAJEK),
            var_pairs=((K.DR1, R.BOTH_CORRECT), (K.DR2, R.BOTH_CORRECT)),
            cov_pairs=((K.DR2, R.BOTH_CORRECT, K.HAJEK),),
            pooled=((K.DR2, R.BOTH_CORRECT, K.HAJEK),),
        ),
        seed=seed,
    )


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--replicates", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=20_240)
    parser.add_argument("--parallel", action="store_true")
    args = parser.parse_args()

    config = default_scenario(args.replicates, args.seed)
    started = time.time()
    summary = run_replications(config, parallel=args.parallel)
    elapsed = time.time() - started

    print(f"replicates {summary.n_replicates} (failed {summary.n_failed}), "
          f"mean population outcome {summary.y_bar_mean:.4f}, {elapsed:.1f}s")
    header = f"{'row':40s} {'bias':>9s} {'emp var':>10s} {'mean est':>10s} {'rel':>7s} {'cover':>6s}"
    print(header)
    for row in summary.rows:
        if row.row_type == "cov":
            print(f"{row.name:40s} {'':9s} {row.emp_cov:10.3e} {row.mean_cov_estimate:10.3e} "
                  f"{row.rel_cov_bias:+7.3f}")
        else:
            print(f"{row.name:40s} {row.mc_bias:+9.5f} {row.emp_variance:10.3e} "
                  f"{row.mean_var_estimate:10.3e} {row.rel_var_bias:+7.3f} {row.coverage:6.3f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
