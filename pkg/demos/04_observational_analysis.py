#!/usr/bin/env python3
"""Analyzing an observational dataset end to end.

Uses the shipped synthetic job-training file (see data/README.md for its
provenance and caveats). The quantity of interest is the effect on the
treated: the program participants. Matching on reduced covariates recovers a
positive effect while matching on the raw ten covariates lands negative --
the overlap diagnostics show why.
"""

from pathlib import Path

import numpy as np

from sdrmatch import (
    BalancingScore,
    estimate_acet,
    estimate_central_subspace,
    fit_logistic,
    load_csv,
    predict_ps,
    reduce_covariates,
    sdr_matching_pipeline,
)

repo = Path(__file__).resolve().parents[1]
covariates = ["age", "educ", "black", "hisp", "married", "nodegr",
              "re74", "re75", "u74", "u75"]
sample = load_csv(repo / "data" / "lalonde_cps3_synthetic.csv",
                  treatment="treat", outcome="re78", covariates=covariates)
print(f"n={sample.n_subjects}, treated={int(sample.treatment.sum())}, "
      f"control={int((1 - sample.treatment).sum())}")

print("\n== effect on the treated, three balancing scores ==")
reduced = sdr_matching_pipeline(sample, estimand="acet")
ambient = estimate_acet(sample, BalancingScore.ambient(sample.covariates))
model = fit_logistic(sample.covariates, sample.treatment)
ps = estimate_acet(
    sample, BalancingScore.propensity(predict_ps(model, sample.covariates))
)
print(f"{'reduced covariates':<24}{reduced.value:>10.1f}   "
      f"(rank {reduced.diagnostics['rank_control']} in the control group)")
print(f"{'ambient covariates':<24}{ambient.value:>10.1f}")
print(f"{'logistic propensity':<24}{ps.value:>10.1f}")

print("\n== overlap along the reduced covariates ==")
estimate = estimate_central_subspace(sample, group=0)
z = reduce_covariates(estimate, sample.covariates)
for j in range(z.shape[1]):
    for label, mask in (("treated", sample.treatment == 1),
                        ("control", sample.treatment == 0)):
        q = np.quantile(z[mask, j], [0.0, 0.25, 0.5, 0.75, 1.0])
        print(f"reduced_{j + 1} {label:<8}" +
              "".join(f"{v:>9.2f}" for v in q))

print("\nwhere the treated sit, control mass is available along the reduced")
print("directions; in the raw ten-dimensional space their nearest neighbors")
print("are systematically different men, which flips the ambient estimate.")
