import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from elasticsolve.distribution import (Bimodal, Constant, LogNormal, ParetoTail, SyntheticSpec, TwoPoint,
                                       UniformDiscrete, expected_min_exact, expected_min_montecarlo,
                                       generate_synthetic, min_of_k_weights, stream_seed)
from elasticsolve.runtime_data import DataError, EmpiricalDistribution

from conftest import T, brute_force_min, dist_from

D1234 = dist_from([1, 2, 3, 4])


def test_exact_examples():
    assert expected_min_exact(D1234, 1).expected_time == 2.5
    assert expected_min_exact(D1234, 1).success_prob == 1.0
    # brute force over all 16 ordered pairs
    assert brute_force_min([1, 2, 3, 4], 2) == 1.875
    assert expected_min_exact(D1234, 2).expected_time == pytest.approx(1.875, abs=1e-12)
    for k in (1, 2, 7, 100):
        assert expected_min_exact(dist_from([5, 5, 5]), k).expected_time == 5.0


def test_exact_success_with_timeouts():
    d = dist_from([1, 2, T, T])
    # 4 of 16 pairs are double timeouts
    n_fail = sum(1 for a, b in itertools.product(d.sorted_times, repeat=2) if a == T and b == T)
    assert n_fail == 4
    assert expected_min_exact(d, 2).success_prob == 0.75


def test_k_must_be_positive():
    with pytest.raises(ValueError):
        expected_min_exact(D1234, 0)
    with pytest.raises(ValueError):
        expected_min_montecarlo(D1234, 0)
    with pytest.raises(ValueError):
        expected_min_montecarlo(D1234, 1, iterations=0)


@pytest.mark.parametrize("n", [1, 2, 7, 100])
@pytest.mark.parametrize("k", [1, 3, 50, 10_000])
def test_weights_sum_to_one(n, k):
    w = min_of_k_weights(n, k)
    assert w.sum() == pytest.approx(1.0, abs=1e-12)
    assert (w >= 0).all()


def test_montecarlo_examples():
    for k in (1, 3, 40):
        assert expected_min_montecarlo(dist_from([5, 5, 5]), k, 1000, rng_seed=k).expected_time == 5.0
    est = expected_min_montecarlo(D1234, 2, 100_000, rng_seed=0)
    assert abs(est.expected_time - 1.875) <= 0.02
    again = expected_min_montecarlo(D1234, 2, 100_000, rng_seed=0)
    assert est == again


def test_montecarlo_success_fraction():
    d = dist_from([1, 2, T, T])
    est = expected_min_montecarlo(d, 2, 100_000, rng_seed=3)
    assert abs(est.success_prob - 0.75) <= 0.01


def test_stream_seed_is_order_independent():
    a = np.random.default_rng(stream_seed(7, "inst-a", 3)).random(4)
    np.random.default_rng(stream_seed(7, "inst-b", 3)).random(4)
    b = np.random.default_rng(stream_seed(7, "inst-a", 3)).random(4)
    assert (a == b).all()
    assert not (a == np.random.default_rng(stream_seed(7, "inst-a", 4)).random(4)).all()


values = st.lists(st.sampled_from([1.0, 2.0, 3.0, 4.0, 5.0, T]), min_size=1, max_size=5)


@settings(max_examples=200, deadline=None)
@given(values, st.integers(1, 3))
def test_exact_matches_enumeration(vals, k):
    d = dist_from(vals)
    est = expected_min_exact(d, k)
    assert abs(est.expected_time - brute_force_min(sorted(vals), k)) <= 1e-9
    m = vals.count(T)
    assert est.success_prob == pytest.approx(1 - (m / len(vals)) ** k, abs=1e-15)


samples = st.lists(st.floats(0.01, 3600.0), min_size=1, max_size=40)


@settings(max_examples=100, deadline=None)
@given(samples, st.integers(0, 5))
def test_exact_monotone(times, timeouts):
    d = EmpiricalDistribution.from_times(times, T, timeouts)
    est = [expected_min_exact(d, k) for k in range(1, 60)]
    assert all(b.expected_time <= a.expected_time for a, b in zip(est, est[1:]))
    assert all(b.success_prob >= a.success_prob for a, b in zip(est, est[1:]))
    assert all(0 < e.expected_time <= T for e in est)


def test_generate_constant():
    d = generate_synthetic(SyntheticSpec(Constant(5), 10, T, 0))
    assert d.sorted_times.tolist() == [5.0] * 10 and d.timeout_count == 0


def test_generate_twopoint():
    d = generate_synthetic(SyntheticSpec(TwoPoint(1, 0.5, 3600), 100, 3600, 11))
    fast = int((d.sorted_times == 1).sum())
    assert set(d.sorted_times.tolist()) <= {1.0, 3600.0}
    assert d.timeout_count == 100 - fast
    again = generate_synthetic(SyntheticSpec(TwoPoint(1, 0.5, 3600), 100, 3600, 11))
    assert (again.sorted_times == d.sorted_times).all()


def test_generate_pareto_capped():
    d = generate_synthetic(SyntheticSpec(ParetoTail(1, 0.5), 100, 3600, 2))
    assert (d.sorted_times > 0).all() and (d.sorted_times <= 3600).all()
    assert d.timeout_count == int((d.sorted_times == 3600).sum())
    # alpha=0.5: P(X >= 3600) = 1/60, so a large sample must contain timeouts
    big = generate_synthetic(SyntheticSpec(ParetoTail(1, 0.5), 3000, 3600, 2))
    assert 0 < big.timeout_count < 150


@pytest.mark.parametrize("kind", [LogNormal(3, 2), UniformDiscrete(1, 100), Bimodal(1, 8, 0.5, 0.3)])
def test_generate_other_kinds(kind):
    d = generate_synthetic(SyntheticSpec(kind, 200, 3600, 5))
    assert d.sample_size == 200 and (d.sorted_times > 0).all() and (d.sorted_times <= 3600).all()


@pytest.mark.parametrize("kind", [LogNormal(0, 0), ParetoTail(1, 0), TwoPoint(1, 1.5, 10),
                                  Constant(-1), UniformDiscrete(5, 2), Bimodal(0, 1, 1, 2)])
def test_generate_invalid(kind):
    with pytest.raises(DataError):
        generate_synthetic(SyntheticSpec(kind, 10, T, 0))
