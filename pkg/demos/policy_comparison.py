"""
Comparing core-count policies, including a learned one
======================================================

A synthetic stand-in for a benchmark: each instance has a log-normal
runtime distribution whose spread varies, and a small feature vector that
is informative about that spread.  We compare fixed core counts, the two
oracle policies and a random forest trained with stratified 10-fold
cross-validation to predict the energy-optimal core count.
"""

import numpy as np

from elasticsolve import (FixedK, ForestConfig, LabeledDataset, LogNormal, Predicted, SyntheticSpec,
                          VirtualBestEnergy, VirtualBestSolved, compute_curve, cross_validate,
                          evaluation_table, extract_labels, generate_synthetic)
from elasticsolve.distribution import stream_seed
from elasticsolve.policy import format_table_text
from elasticsolve.tradeoff import aggregate_slack_curve

rng = np.random.default_rng(0)
GRID = range(1, 101)

##############################################################################
# Build 300 instances.  ``sigma`` controls how heavy the tail is; the
# features are noisy views of (mu, sigma) plus pure noise.

curves, features = [], {}
for i in range(300):
    inst = f"inst{i:03d}"
    mu, sigma = rng.uniform(2, 6), rng.uniform(0.2, 3.5)
    d = generate_synthetic(SyntheticSpec(LogNormal(mu, sigma), 100, 3600.0, stream_seed(0, inst)))
    curves.append(compute_curve(d, GRID, instance=inst))
    features[inst] = np.concatenate([[mu, sigma] + rng.normal(0, 0.2, 2), rng.random(4)])

labels = extract_labels(curves)
ds = LabeledDataset(list(labels), np.array([features[i] for i in labels]),
                    np.array(list(labels.values()), dtype=float))
print("distinct optimal core counts:", len(set(labels.values())))

##############################################################################
# Out-of-fold predictions feed the learned policy, so every instance is
# judged by a model that never saw it.

report = cross_validate(ds, ForestConfig(tree_count=100, rng_seed=0))
print(f"cross-validated MAE {report.pooled_mae:.2f} cores (per fold: "
      + ", ".join(f"{m:.1f}" for m in report.fold_mae) + ")")

policies = [FixedK(1), FixedK(2), FixedK(4), FixedK(8), FixedK(100),
            VirtualBestEnergy(), VirtualBestSolved(), Predicted(report.predictions)]
print()
print(format_table_text(evaluation_table(policies, curves)))

##############################################################################
# How much energy can be saved by accepting a slightly slower solve?

for eps, rel in aggregate_slack_curve(curves, [0.0, 0.1, 0.2, 0.5]):
    print(f"allow {eps:>4.0%} slower -> {rel:.1%} of the fastest configuration's energy")
