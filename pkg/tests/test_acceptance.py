"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines.
"""
import itertools
import time

import numpy as np

from elasticsolve.cli import main as cli_main
from elasticsolve.distribution import (Bimodal, Constant, LogNormal, ParetoTail, SyntheticSpec, TwoPoint,
                                       UniformDiscrete, expected_min_exact, expected_min_montecarlo,
                                       generate_synthetic)
from elasticsolve.orchestrator import CANCELLED, CRASHED, TIMEOUT, race, sleeper_command
from elasticsolve.policy import FixedK, evaluate_policy
from elasticsolve.predictor import (ForestConfig, LabeledDataset, cross_validate, strata_of, stratified_kfold,
                                    train_forest)
from elasticsolve.tradeoff import (TradeoffCurve, aggregate_slack_curve, compute_curve, dominates, make_point,
                                   min_energy_cores, pareto_frontier)

from conftest import T, brute_force_min, dist_from, threshold_dataset
from test_orchestrator import survivors

GRID = list(range(1, 101))


def verdict(n, title, ok, detail=""):
    print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {n:>2}: {title}" + (f" ({detail})" if detail else ""))
    assert ok, f"criterion {n} failed: {detail}"


def random_kind(rng):
    choice = rng.integers(6)
    if choice == 0:
        return Constant(float(rng.uniform(0.5, 100)))
    if choice == 1:
        lo = int(rng.integers(1, 50))
        return UniformDiscrete(lo, lo + int(rng.integers(0, 500)))
    if choice == 2:
        return LogNormal(float(rng.uniform(-1, 6)), float(rng.uniform(0.1, 3)))
    if choice == 3:
        return ParetoTail(float(rng.uniform(0.1, 10)), float(rng.uniform(0.2, 3)))
    if choice == 4:
        return TwoPoint(float(rng.uniform(0.5, 10)), float(rng.uniform(0, 1)), float(rng.uniform(10, 5000)))
    return Bimodal(float(rng.uniform(0, 3)), float(rng.uniform(4, 9)), float(rng.uniform(0.1, 1.5)),
                   float(rng.uniform(0, 1)))


def test_c01_exact_vs_enumeration():
    t0 = time.monotonic()
    worst, cases = 0.0, 0
    alphabet = [1.0, 2.0, 3.0, 4.0, 5.0, T]
    for n in range(1, 6):
        for sample in itertools.combinations_with_replacement(alphabet, n):
            d = dist_from(list(sample))
            for k in (1, 2, 3):
                worst = max(worst, abs(expected_min_exact(d, k).expected_time - brute_force_min(sample, k)))
                cases += 1
    elapsed = time.monotonic() - t0
    verdict(1, "exact formula equals n^k enumeration within 1e-9",
            worst <= 1e-9 and elapsed < 10, f"{cases} cases, max err {worst:.2e}, {elapsed:.1f}s")


def test_c02_montecarlo_convergence():
    t0 = time.monotonic()
    d = generate_synthetic(SyntheticSpec(LogNormal(3.0, 1.5), 100, T, 2024))
    errs = {}
    for k in (1, 2, 10, 100):
        exact = expected_min_exact(d, k).expected_time
        mc = expected_min_montecarlo(d, k, 100_000, rng_seed=0).expected_time
        errs[k] = abs(mc - exact) / exact
    elapsed = time.monotonic() - t0
    verdict(2, "Monte Carlo within 1% of exact at 100,000 iterations",
            max(errs.values()) <= 0.01 and elapsed < 30,
            ", ".join(f"k={k}: {e:.2%}" for k, e in errs.items()) + f", {elapsed:.1f}s")


def test_c03_monotonicity():
    rng = np.random.default_rng(3)
    violations = 0
    for i in range(1000):
        spec = SyntheticSpec(random_kind(rng), int(rng.integers(1, 150)), T, int(rng.integers(2**31)))
        c = compute_curve(generate_synthetic(spec), GRID)
        t = [p.expected_time for p in c.points]
        s = [p.success_prob for p in c.points]
        violations += sum(b > a for a, b in zip(t, t[1:])) + sum(b < a for a, b in zip(s, s[1:]))
    verdict(3, "s_k non-increasing, success non-decreasing on 1,000 distributions",
            violations == 0, f"{violations} violations")


def test_c04_energy_identity():
    rng = np.random.default_rng(4)
    bad_points = 0
    curves = []
    for i in range(200):
        spec = SyntheticSpec(random_kind(rng), 100, T, i)
        c = compute_curve(generate_synthetic(spec), GRID, instance=f"i{i}")
        bad_points += sum(p.energy != p.k * p.expected_time for p in c.points)
        curves.append(c)
    bad_policies = [k for k in (1, 2, 4, 8, 100)
                    if (e := evaluate_policy(FixedK(k), curves)).mean_energy != k * e.mean_time]
    table_row = 8 * 403.5 == 3228
    verdict(4, "energy = k * time bit-exactly; FixedK mean_energy = k * mean_time",
            bad_points == 0 and not bad_policies and table_row,
            f"{bad_points} bad points, bad fixed-k policies {bad_policies}, 8 x 403.5 = {8 * 403.5}")


def test_c05_two_point_heavy_tail():
    c = compute_curve(dist_from([1.0] * 50 + [T] * 50), GRID)
    k, e = min_energy_cores(c)
    e1 = c.point(1).energy
    verdict(5, "two-point sample: k* = 15, energy 16.648, >100x below k = 1",
            k == 15 and abs(e - 16.647491455078125) <= 1e-6 and e1 == 1800.5 and e1 / e > 100,
            f"k*={k}, energy={e:.6f}, k=1 energy={e1}, ratio {e1 / e:.1f}")


def test_c06_uniform_single_core():
    c = compute_curve(dist_from([float(v) for v in range(1, 101)]), GRID)
    k, e = min_energy_cores(c)
    verdict(6, "uniform 1..100 sample: single core minimises energy", k == 1, f"k*={k}, energy={e}")


def test_c07_pareto_properties():
    rng = np.random.default_rng(7)
    unsound = incomplete = plateau_leaks = plateaus = 0
    for i in range(1000):
        if i % 2:
            spec = SyntheticSpec(random_kind(rng), int(rng.integers(1, 120)), T, i)
            c = compute_curve(generate_synthetic(spec), range(1, int(rng.integers(2, 60))))
        else:
            # random decreasing times that flatten from a random k* on
            n = int(rng.integers(2, 60))
            kstar = int(rng.integers(1, n + 1))
            steps = np.concatenate([rng.uniform(0, 5, kstar - 1), np.zeros(n - kstar + 1)])
            times = 1.0 + np.cumsum(steps[::-1])[::-1]
            c = TradeoffCurve("p", [make_point(k, t, 1.0) for k, t in enumerate(times, start=1)])
        front = pareto_frontier(c)
        ks = {p.k for p in front}
        unsound += any(dominates(a, b) for a in front for b in front)
        incomplete += sum(not any(dominates(f, p) for f in front) for p in c.points if p.k not in ks)
        times = [p.expected_time for p in c.points]
        plateau_start = next(j for j in range(len(times)) if all(t == times[j] for t in times[j:]))
        if plateau_start < len(times) - 1:
            plateaus += 1
            plateau_leaks += any(k > c.points[plateau_start].k for k in ks)
    verdict(7, "frontier non-dominated and complete on 1,000 curves; nothing beyond a plateau",
            unsound == incomplete == plateau_leaks == 0 and plateaus > 0,
            f"unsound={unsound}, incomplete={incomplete}, plateau leaks={plateau_leaks} of {plateaus} plateaus")


def test_c08_slack_curve():
    rng = np.random.default_rng(8)
    curves = []
    for i in range(50):
        kind = [ParetoTail(float(rng.uniform(0.5, 5)), float(rng.uniform(0.3, 1.2))),
                LogNormal(float(rng.uniform(1, 5)), float(rng.uniform(1.5, 3))),
                TwoPoint(float(rng.uniform(1, 20)), float(rng.uniform(0.05, 0.7)), T)][i % 3]
        d = generate_synthetic(SyntheticSpec(kind, 100, T, 800 + i))
        curves.append(compute_curve(d, GRID, instance=f"h{i}"))
    eps = [round(0.05 * j, 2) for j in range(11)]
    rel = [r for _, r in aggregate_slack_curve(curves, eps)]
    ok = rel[0] == 1.0 and all(b <= a for a, b in zip(rel, rel[1:]))
    verdict(8, "slack curve 1.0 at eps=0 and non-increasing to eps=0.5", ok,
            "eps 0.1 -> %.3f, eps 0.2 -> %.3f, eps 0.5 -> %.3f" % (rel[2], rel[4], rel[10]))


def test_c09_predictor():
    t0 = time.monotonic()
    X, y = threshold_dataset()
    ds = LabeledDataset([f"i{i}" for i in range(len(y))], X, y)
    report = cross_validate(ds, ForestConfig(rng_seed=0))
    folds = stratified_kfold(y, 10, rng_seed=0)
    sizes = np.bincount(folds, minlength=10)
    strata = strata_of(y)
    balanced = all(np.ptp(np.bincount(folds[strata == s], minlength=10)) <= 1 for s in np.unique(strata))
    partition = sorted(np.concatenate([np.nonzero(folds == f)[0] for f in range(10)]).tolist()) == list(range(500))
    cfg = ForestConfig(tree_count=100, rng_seed=11)
    deterministic = train_forest(ds, cfg).to_json() == train_forest(ds, cfg).to_json()
    covered = set(report.predictions) == set(ds.instances)
    elapsed = time.monotonic() - t0
    verdict(9, "stratified 10-fold CV pooled MAE <= 2, folds valid, forests deterministic",
            report.pooled_mae <= 2 and np.ptp(sizes) <= 1 and balanced and partition and deterministic
            and covered and elapsed < 60,
            f"pooled MAE {report.pooled_mae:.3f}, fold sizes {sizes.min()}-{sizes.max()}, {elapsed:.1f}s")


def test_c10_orchestrator(sleeper_instance):
    inst = sleeper_instance({0: 0.2, 1: 2, 2: 2, 3: 2})
    r = race(sleeper_command(), inst, [0, 1, 2, 3], timeout=10)
    left = survivors(inst)
    failing = sleeper_instance({}, default=0.05, fail_seeds=[0, 1])
    f = race(sleeper_command(), failing, [0, 1], timeout=1)
    ok = (r.winner == 0 and r.wall_time <= 1.0 and r.total_energy < 8 and not left
          and all(p.status == CANCELLED for p in r.per_process if p.seed != 0)
          and not f.won and all(p.status in (CRASHED, TIMEOUT) for p in f.per_process)
          and not survivors(failing))
    verdict(10, "sleeper race: 0.2 s seed wins, <= 1 s wall, < 8 core-s, no orphans; all-fail race",
            ok, f"winner={r.winner}, wall={r.wall_time:.3f}s, energy={r.total_energy:.3f}, "
                f"orphans={len(left)}, all-fail won={f.won}")


def test_c11_end_to_end(tmp_path):
    t0 = time.monotonic()
    outputs = []
    for run in ("a", "b"):
        d = tmp_path / run
        d.mkdir()
        steps = [
            ["synth", "--kind", "pareto", "--alpha", "0.6", "--n", "100", "--instances", "20", "--seed", "42",
             "--out", d / "runs.csv"],
            ["curves", "--runtimes", d / "runs.csv", "--out", d / "curves.csv"],
            ["analyze", "--curves", d / "curves.csv", "--out-dir", d / "analysis"],
            ["policy-eval", "--curves", d / "curves.csv", "--out", d / "policies.csv", "--detail", d / "detail.csv"],
        ]
        codes = [cli_main([str(x) for x in s]) for s in steps]
        assert codes == [0, 0, 0, 0]
        files = ["runs.csv", "curves.csv", "analysis/frontier.csv", "analysis/slack.csv",
                 "analysis/min_energy.csv", "policies.csv", "detail.csv"]
        outputs.append({f: (d / f).read_bytes() for f in files})
    elapsed = time.monotonic() - t0
    identical = outputs[0] == outputs[1]
    verdict(11, "synth -> curves -> analyze -> policy-eval reproducible on 20 instances",
            identical and elapsed < 60, f"{len(outputs[0])} files bit-identical={identical}, {elapsed:.1f}s")
