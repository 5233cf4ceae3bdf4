"""Time/energy curves over a core-count grid, Pareto frontiers and slack aggregation.

Energy is the core-seconds proxy ``k * s_k``: every one of the ``k``
searches runs until the first of them finishes.
"""
from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

from . import distribution as dist
from .runtime_data import DataError, EmpiricalDistribution

DEFAULT_GRID = tuple(range(1, 101))
CURVE_HEADER = ("instance", "k", "expected_time", "energy", "success_prob")
FRONTIER_HEADER = ("instance", "k", "expected_time", "energy")
SLACK_HEADER = ("epsilon", "mean_relative_energy")


@dataclass(frozen=True)
class CurvePoint:
    k: int
    expected_time: float
    energy: float
    success_prob: float


@dataclass
class TradeoffCurve:
    instance: str
    points: List[CurvePoint]

    @property
    def ks(self) -> List[int]:
        return [p.k for p in self.points]

    def point(self, k: int) -> CurvePoint:
        for p in self.points:
            if p.k == k:
                return p
        raise KeyError(f"k={k} not on the grid of {self.instance!r}")


@dataclass(frozen=True)
class ParetoPoint:
    k: int
    expected_time: float
    energy: float


def parse_grid(spec: str) -> List[int]:
    """Parse ``"1..100"``, ``"1..64:2"`` style ranges or comma lists like ``"1,2,4,8"``."""
    ks = []
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        m = re.fullmatch(r"(\d+)\.\.(\d+)(?::(\d+))?", part)
        if m:
            lo, hi, step = int(m[1]), int(m[2]), int(m[3] or 1)
            ks.extend(range(lo, hi + 1, step))
        elif part.isdigit():
            ks.append(int(part))
        else:
            raise ValueError(f"bad grid element {part!r}")
    if not ks:
        raise ValueError("empty grid")
    if any(k < 1 for k in ks):
        raise ValueError("grid values must be >= 1")
    return sorted(set(ks))


def make_point(k: int, expected_time: float, success_prob: float) -> CurvePoint:
    return CurvePoint(int(k), float(expected_time), float(k) * float(expected_time), float(success_prob))


def compute_curve(d: EmpiricalDistribution, k_grid: Sequence[int] = DEFAULT_GRID, method: str = "exact",
                  iterations: int = dist.DEFAULT_ITERATIONS, master_seed: int = 0,
                  instance: str = None) -> TradeoffCurve:
    """One point per grid value.

    With ``method="montecarlo"`` each ``(instance, k)`` pair uses its own
    RNG stream derived from ``master_seed``.
    """
    grid = sorted(set(int(k) for k in k_grid))
    if not grid:
        raise ValueError("empty grid")
    instance = instance if instance is not None else (d.instance or "")
    points = []
    for k in grid:
        if method == "exact":
            est = dist.expected_min_exact(d, k)
        else:
            est = dist.expected_min_montecarlo(d, k, iterations, dist.stream_seed(master_seed, instance, k))
        points.append(make_point(k, est.expected_time, est.success_prob))
    return TradeoffCurve(instance, points)


def min_energy_cores(c: TradeoffCurve) -> Tuple[int, float]:
    if not c.points:
        raise ValueError("empty curve")
    best = min(c.points, key=lambda p: (p.energy, p.k))
    return best.k, best.energy


def dominates(a, b) -> bool:
    return (a.expected_time <= b.expected_time and a.energy <= b.energy
            and (a.expected_time < b.expected_time or a.energy < b.energy))


def pareto_frontier(c: TradeoffCurve) -> List[ParetoPoint]:
    """Non-dominated (time, energy) points in ascending k; duplicates keep the smaller k."""
    if not c.points:
        raise ValueError("empty curve")
    order = sorted(c.points, key=lambda p: (p.expected_time, p.energy, p.k))
    kept = []
    best_energy = math.inf
    for p in order:
        if p.energy < best_energy:
            kept.append(p)
            best_energy = p.energy
    return [ParetoPoint(p.k, p.expected_time, p.energy) for p in sorted(kept, key=lambda p: p.k)]


def relative_energy(c: TradeoffCurve, epsilon: float) -> float:
    """Best energy within ``(1 + epsilon)`` of the fastest time, relative to the fastest point's energy."""
    fastest = min(c.points, key=lambda p: (p.expected_time, p.k))
    bound = (1.0 + epsilon) * fastest.expected_time
    best = min(p.energy for p in c.points if p.expected_time <= bound)
    return best / fastest.energy


def aggregate_slack_curve(curves: Iterable[TradeoffCurve], slack_grid: Sequence[float],
                          geometric: bool = False) -> List[Tuple[float, float]]:
    curves = list(curves)
    if any(not c.points for c in curves):
        raise ValueError("empty curve")
    if any(e < 0 for e in slack_grid):
        raise ValueError("slack values must be non-negative")
    out = []
    for eps in slack_grid:
        rel = np.array([relative_energy(c, eps) for c in curves])
        if not len(rel):
            out.append((float(eps), float("nan")))
        elif geometric:
            out.append((float(eps), float(np.exp(np.mean(np.log(rel))))))
        else:
            out.append((float(eps), float(np.mean(rel))))
    return out


# --------------------------------------------------------------------------
# CSV I/O

def _fmt(x) -> str:
    return repr(float(x))


def format_curves_csv(curves: Iterable[TradeoffCurve]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CURVE_HEADER)
    for c in curves:
        for p in c.points:
            w.writerow([c.instance, p.k, _fmt(p.expected_time), _fmt(p.energy), _fmt(p.success_prob)])
    return buf.getvalue()


def load_curves_csv(path) -> List[TradeoffCurve]:
    curves: Dict[str, List[CurvePoint]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != CURVE_HEADER:
            raise DataError(f"{path}:1: expected header {','.join(CURVE_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise DataError(f"{path}:{lineno}: expected 5 fields")
            try:
                p = CurvePoint(int(row[1]), float(row[2]), float(row[3]), float(row[4]))
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
            curves.setdefault(row[0], []).append(p)
    if not curves:
        raise DataError(f"{path}: no curves")
    return [TradeoffCurve(inst, sorted(pts, key=lambda p: p.k)) for inst, pts in curves.items()]


def format_frontier_csv(frontiers: Dict[str, List[ParetoPoint]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FRONTIER_HEADER)
    for inst, pts in frontiers.items():
        for p in pts:
            w.writerow([inst, p.k, _fmt(p.expected_time), _fmt(p.energy)])
    return buf.getvalue()


def format_slack_csv(rows: Iterable[Tuple[float, float]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SLACK_HEADER)
    for eps, rel in rows:
        w.writerow([_fmt(eps), _fmt(rel)])
    return buf.getvalue()
