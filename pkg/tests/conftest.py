import itertools
import json

import numpy as np
import pytest

from elasticsolve.runtime_data import EmpiricalDistribution

T = 3600.0


def brute_force_min(values, k):
    """Mean of min over all n**k ordered k-tuples drawn from ``values``, and P(min is a timeout)."""
    tuples = list(itertools.product(range(len(values)), repeat=k))
    mins = [min(values[i] for i in tup) for tup in tuples]
    return sum(mins) / len(tuples)


def dist_from(values, cap=T):
    """Distribution whose entries equal to ``cap`` are timeouts."""
    solved = [v for v in values if v != cap]
    return EmpiricalDistribution.from_times(solved, cap, timeouts=len(values) - len(solved))


def threshold_dataset(n=500, width=5, seed=0):
    """Label 1 when feature 0 < 0.5 else 64; other features are noise."""
    rng = np.random.default_rng(seed)
    X = rng.random((n, width))
    y = np.where(X[:, 0] < 0.5, 1.0, 64.0)
    return X, y


@pytest.fixture
def sleeper_instance(tmp_path):
    def make(durations, default=2.0, **extra):
        path = tmp_path / f"inst-{len(list(tmp_path.iterdir()))}.json"
        spec = {"durations": {str(k): v for k, v in durations.items()}, "default": default}
        spec.update(extra)
        path.write_text(json.dumps(spec))
        return str(path)
    return make
