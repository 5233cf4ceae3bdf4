"""Time/energy tradeoffs of running k seeded searches in parallel.

Energy is measured as core-seconds: ``k`` searches race and all stop when
the first finishes, so running on ``k`` cores costs ``k * s_k`` where
``s_k`` is the expected minimum of ``k`` runtimes.
"""
from .distribution import (Bimodal, Constant, LogNormal, MinOfKEstimate, ParetoTail, SyntheticSpec,
                           TwoPoint, UniformDiscrete, expected_min_exact, expected_min_montecarlo,
                           generate_synthetic)
from .policy import (FixedK, Predicted, VirtualBestEnergy, VirtualBestSolved, choose_cores,
                     evaluate_policy, evaluation_table)
from .predictor import (ForestConfig, ForestModel, LabeledDataset, cross_validate, extract_labels,
                        stratified_kfold, train_forest)
from .runtime_data import (DataError, EmpiricalDistribution, RunOutcome, RuntimeMatrix, Status,
                           distribution_of, filter_instances, load_features_csv, load_runtime_csv)
from .tradeoff import (CurvePoint, ParetoPoint, TradeoffCurve, aggregate_slack_curve, compute_curve,
                       min_energy_cores, pareto_frontier)

__version__ = "0.1.0"
