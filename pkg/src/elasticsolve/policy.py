"""Core-count selection policies and their aggregate evaluation."""
from __future__ import annotations

import bisect
import csv
import io
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Sequence, Tuple

from .tradeoff import TradeoffCurve, min_energy_cores

POLICY_HEADER = ("policy", "success_rate", "mean_energy", "mean_time")
DETAIL_HEADER = ("policy", "instance", "k", "expected_time", "energy", "success_prob")


class PolicyError(ValueError):
    pass


@dataclass(frozen=True)
class FixedK:
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise PolicyError("FixedK needs k >= 1")

    @property
    def name(self):
        return f"Fixed {self.k} core" + ("" if self.k == 1 else "s")


@dataclass(frozen=True)
class VirtualBestEnergy:
    name: str = "VB Energy"


@dataclass(frozen=True)
class VirtualBestSolved:
    name: str = "VB Solved"


@dataclass(frozen=True)
class Predicted:
    predictions: Mapping[str, float] = field(hash=False)
    name: str = "ML Prediction"


Policy = FixedK | VirtualBestEnergy | VirtualBestSolved | Predicted


def nearest_grid_k(value: float, grid: Sequence[int]) -> int:
    """Round ``value`` to the closest grid member; ties go to the smaller k."""
    grid = sorted(grid)
    i = bisect.bisect_left(grid, value)
    if i == 0:
        return grid[0]
    if i == len(grid):
        return grid[-1]
    lo, hi = grid[i - 1], grid[i]
    return lo if value - lo <= hi - value else hi


def choose_cores(p: Policy, c: TradeoffCurve) -> int:
    if not c.points:
        raise PolicyError("empty curve")
    if isinstance(p, FixedK):
        if p.k not in c.ks:
            raise PolicyError(f"k={p.k} is not on the grid of {c.instance!r}")
        return p.k
    if isinstance(p, VirtualBestEnergy):
        return min_energy_cores(c)[0]
    if isinstance(p, VirtualBestSolved):
        top = max(q.success_prob for q in c.points)
        return min((q for q in c.points if q.success_prob == top), key=lambda q: (q.energy, q.k)).k
    if isinstance(p, Predicted):
        if c.instance not in p.predictions:
            raise PolicyError(f"no prediction for instance {c.instance!r}")
        return nearest_grid_k(float(p.predictions[c.instance]), c.ks)
    raise PolicyError(f"unknown policy {p!r}")


@dataclass
class PolicyEvaluation:
    policy: str
    success_rate: float
    mean_energy: float
    mean_time: float
    per_instance: List[Tuple[str, int, float, float, float]]


def evaluate_policy(p: Policy, curves: Iterable[TradeoffCurve]) -> PolicyEvaluation:
    """Mean success probability, energy and time at each instance's chosen k.

    Means are taken with exactly rounded sums in instance-id order, so the
    result does not depend on the order of ``curves``.  Energy is summed per
    chosen k as ``k * sum(times) / n``; this is the same arithmetic mean and
    keeps ``mean_energy == k * mean_time`` exact for fixed-k policies.
    """
    rows = []
    for c in curves:
        k = choose_cores(p, c)
        q = c.point(k)
        rows.append((c.instance, k, q.expected_time, q.energy, q.success_prob))
    rows.sort()
    n = len(rows)
    if n == 0:
        return PolicyEvaluation(p.name, math.nan, math.nan, math.nan, [])
    by_k: Dict[int, List[float]] = defaultdict(list)
    for _, k, t, _, _ in rows:
        by_k[k].append(t)
    mean_time = math.fsum(r[2] for r in rows) / n
    mean_energy = math.fsum(k * (math.fsum(ts) / n) for k, ts in sorted(by_k.items()))
    success = math.fsum(r[4] for r in rows) / n
    return PolicyEvaluation(p.name, success, mean_energy, mean_time, rows)


def evaluation_table(policies: Iterable[Policy], curves: Sequence[TradeoffCurve]) -> List[PolicyEvaluation]:
    """Evaluations sorted by success rate (descending), then mean time (ascending)."""
    curves = list(curves)
    evals = [evaluate_policy(p, curves) for p in policies]
    return sorted(evals, key=lambda e: (-e.success_rate, e.mean_time))


def parse_policies(spec: str, predictions: Mapping[str, float] = None) -> List[Policy]:
    """Parse ``"fixed:1,fixed:8,vb-energy,vb-solved,predicted"``."""
    out = []
    for token in (t.strip().lower() for t in spec.split(",")):
        if not token:
            continue
        if token.startswith("fixed:"):
            out.append(FixedK(int(token.split(":", 1)[1])))
        elif token == "vb-energy":
            out.append(VirtualBestEnergy())
        elif token == "vb-solved":
            out.append(VirtualBestSolved())
        elif token == "predicted":
            if predictions is None:
                raise PolicyError("policy 'predicted' needs a predictions file")
            out.append(Predicted(dict(predictions)))
        else:
            raise PolicyError(f"unknown policy {token!r}")
    return out


def format_table_csv(evals: Iterable[PolicyEvaluation]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(POLICY_HEADER)
    for e in evals:
        w.writerow([e.policy, repr(e.success_rate), repr(e.mean_energy), repr(e.mean_time)])
    return buf.getvalue()


def format_detail_csv(evals: Iterable[PolicyEvaluation]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(DETAIL_HEADER)
    for e in evals:
        for inst, k, t, en, s in e.per_instance:
            w.writerow([e.policy, inst, k, repr(t), repr(en), repr(s)])
    return buf.getvalue()


def format_table_text(evals: Sequence[PolicyEvaluation]) -> str:
    lines = [f"{'':>3}  {'Policy':<16} {'Success%':>9} {'Energy':>12} {'Time (s)':>10}"]
    for i, e in enumerate(evals, 1):
        lines.append(f"{i:>3}  {e.policy:<16} {100 * e.success_rate:>8.1f}% "
                     f"{e.mean_energy:>12.1f} {e.mean_time:>10.1f}")
    return "\n".join(lines) + "\n"
