"""Runtime matrices, instance features and per-instance empirical distributions.

A runtime matrix holds one outcome per (instance, seed) pair.  Runs that
time out or crash are stored with ``time == timeout_cap`` so every
downstream expectation is a capped expectation.
"""
from __future__ import annotations

import csv
import enum
import io
import math
import os
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

import numpy as np

RUNTIME_HEADER = ("instance", "seed", "status", "time_seconds")


class DataError(ValueError):
    """Raised for malformed or inconsistent runtime/feature data."""


class Status(str, enum.Enum):
    SOLVED = "solved"
    TIMEOUT = "timeout"
    CRASHED = "crashed"


@dataclass(frozen=True)
class RunOutcome:
    status: Status
    time: float

    @property
    def solved(self) -> bool:
        return self.status is Status.SOLVED


@dataclass
class RuntimeMatrix:
    """Outcomes of every seed on every instance.

    ``entries`` maps instance id to a list of ``(seed, RunOutcome)`` pairs
    sorted by seed.
    """

    timeout_cap: float
    entries: Dict[str, List[Tuple[int, RunOutcome]]]

    def __post_init__(self):
        if not self.timeout_cap > 0:
            raise DataError("timeout_cap must be positive")
        counts = {len(v) for v in self.entries.values()}
        if len(counts) > 1:
            raise DataError(f"inconsistent seed counts across instances: {sorted(counts)}")
        for inst, runs in self.entries.items():
            for seed, out in runs:
                if out.time > self.timeout_cap:
                    raise DataError(f"{inst} seed {seed}: time {out.time} exceeds cap {self.timeout_cap}")

    @property
    def seed_count(self) -> int:
        return len(next(iter(self.entries.values()))) if self.entries else 0

    @property
    def instances(self) -> List[str]:
        return list(self.entries)

    def outcomes(self, instance: str) -> List[RunOutcome]:
        return [o for _, o in self.entries[instance]]

    def __len__(self):
        return len(self.entries)

    def __eq__(self, other):
        if not isinstance(other, RuntimeMatrix):
            return NotImplemented
        return self.timeout_cap == other.timeout_cap and self.entries == other.entries


@dataclass
class InstanceFeatures:
    instance: str
    values: np.ndarray
    missing: np.ndarray

    @property
    def width(self) -> int:
        return len(self.values)


@dataclass
class EmpiricalDistribution:
    """Sorted, timeout-capped runtime sample of one instance.

    Timeout entries occupy the last ``timeout_count`` positions of
    ``sorted_times`` (all equal to ``timeout_cap``).
    """

    sorted_times: np.ndarray
    timeout_count: int
    timeout_cap: float
    instance: Optional[str] = field(default=None, compare=False)

    def __post_init__(self):
        self.sorted_times = np.asarray(self.sorted_times, dtype=float)
        n = len(self.sorted_times)
        if self.sorted_times.ndim != 1 or n == 0:
            raise DataError("empirical distribution needs at least one time")
        if not 0 <= self.timeout_count <= n:
            raise DataError("timeout_count out of range")
        if np.any(np.diff(self.sorted_times) < 0):
            raise DataError("sorted_times must be non-decreasing")
        if self.timeout_count and np.any(self.sorted_times[n - self.timeout_count:] != self.timeout_cap):
            raise DataError("timeout entries must equal the cap")

    @property
    def sample_size(self) -> int:
        return len(self.sorted_times)

    @classmethod
    def from_times(cls, times: Iterable[float], timeout_cap: float, timeouts: int = 0,
                   instance: Optional[str] = None) -> "EmpiricalDistribution":
        """Build from solved times plus ``timeouts`` capped entries."""
        solved = np.sort(np.asarray(list(times), dtype=float))
        if np.any(solved <= 0) or np.any(solved > timeout_cap):
            raise DataError("solved times must lie in (0, timeout_cap]")
        full = np.concatenate([solved, np.full(timeouts, float(timeout_cap))])
        return cls(full, timeouts, float(timeout_cap), instance)


def _parse_float(text: str, where: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise DataError(f"{where}: cannot parse time {text!r}") from None
    if not math.isfinite(value):
        raise DataError(f"{where}: non-finite time {text!r}")
    return value


def read_runtime_csv(stream, timeout_cap: float, source: str = "<stream>") -> RuntimeMatrix:
    if not timeout_cap > 0:
        raise DataError("timeout_cap must be positive")
    reader = csv.reader(stream)
    header = next(reader, None)
    if header is None:
        raise DataError(f"{source}: no instances")
    if tuple(h.strip() for h in header) != RUNTIME_HEADER:
        raise DataError(f"{source}:1: expected header {','.join(RUNTIME_HEADER)}")

    entries: Dict[str, Dict[int, RunOutcome]] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        where = f"{source}:{lineno}"
        if len(row) != 4:
            raise DataError(f"{where}: expected 4 fields, got {len(row)}")
        inst, seed_s, status_s, time_s = (c.strip() for c in row)
        if not inst:
            raise DataError(f"{where}: empty instance id")
        try:
            seed = int(seed_s)
        except ValueError:
            raise DataError(f"{where}: bad seed {seed_s!r}") from None
        try:
            status = Status(status_s.lower())
        except ValueError:
            raise DataError(f"{where}: unknown status {status_s!r}") from None

        if status is Status.SOLVED:
            if not time_s:
                raise DataError(f"{where}: solved run without time")
            t = _parse_float(time_s, where)
            if t <= 0:
                raise DataError(f"{where}: solved time must be positive")
            if t > timeout_cap:
                raise DataError(f"{where}: solved time {t} exceeds timeout cap {timeout_cap}")
        else:
            if time_s:
                _parse_float(time_s, where)
            t = float(timeout_cap)

        runs = entries.setdefault(inst, {})
        if seed in runs:
            raise DataError(f"{where}: duplicate (instance, seed) pair ({inst}, {seed})")
        runs[seed] = RunOutcome(status, t)

    if not entries:
        raise DataError(f"{source}: no instances")
    ordered = {inst: sorted(runs.items()) for inst, runs in entries.items()}
    return RuntimeMatrix(float(timeout_cap), ordered)


def load_runtime_csv(path, timeout_cap: float) -> RuntimeMatrix:
    """Load and validate a runtimes CSV (``instance,seed,status,time_seconds``).

    Timeout and crashed rows are normalised to ``time == timeout_cap``;
    solved rows above the cap are rejected.
    """
    with open(path, newline="") as fh:
        return read_runtime_csv(fh, timeout_cap, source=os.fspath(path))


def format_runtime_csv(matrix: RuntimeMatrix) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RUNTIME_HEADER)
    for inst, runs in matrix.entries.items():
        for seed, out in runs:
            writer.writerow([inst, seed, out.status.value, repr(float(out.time))])
    return buf.getvalue()


def write_runtime_csv(matrix: RuntimeMatrix, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(format_runtime_csv(matrix))


def filter_instances(matrix: RuntimeMatrix, easy_threshold: float = 1.0) -> RuntimeMatrix:
    """Drop never-solved instances and instances solved under ``easy_threshold`` on every run."""
    kept = {}
    for inst, runs in matrix.entries.items():
        outs = [o for _, o in runs]
        if not any(o.solved for o in outs):
            continue
        if all(o.solved and o.time < easy_threshold for o in outs):
            continue
        kept[inst] = runs
    return RuntimeMatrix(matrix.timeout_cap, kept)


def distribution_of(matrix: RuntimeMatrix, instance: str) -> EmpiricalDistribution:
    if instance not in matrix.entries:
        raise KeyError(f"unknown instance {instance!r}")
    outs = matrix.outcomes(instance)
    solved = [o.time for o in outs if o.solved]
    # crashed runs count as timeouts
    return EmpiricalDistribution.from_times(solved, matrix.timeout_cap,
                                            timeouts=len(outs) - len(solved), instance=instance)


def distributions(matrix: RuntimeMatrix) -> Dict[str, EmpiricalDistribution]:
    return {inst: distribution_of(matrix, inst) for inst in matrix.entries}


def matrix_from_distributions(dists: Mapping[str, EmpiricalDistribution]) -> RuntimeMatrix:
    """Inverse of :func:`distributions`; seeds are numbered 0..n-1 in sorted order."""
    caps = {d.timeout_cap for d in dists.values()}
    if len(caps) != 1:
        raise DataError("all distributions must share one timeout cap")
    cap = caps.pop()
    entries = {}
    for inst, d in dists.items():
        n_solved = d.sample_size - d.timeout_count
        runs = []
        for i, t in enumerate(d.sorted_times):
            status = Status.SOLVED if i < n_solved else Status.TIMEOUT
            runs.append((i, RunOutcome(status, float(t))))
        entries[inst] = runs
    return RuntimeMatrix(cap, entries)


def load_features_csv(path) -> Dict[str, InstanceFeatures]:
    """Load ``instance,<f1>,<f2>,...``; empty cells become NaN and are flagged missing."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or len(header) < 2:
            raise DataError(f"{path}: header must name at least one feature")
        width = len(header) - 1
        out: Dict[str, InstanceFeatures] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width + 1:
                raise DataError(f"{path}:{lineno}: ragged row ({len(row) - 1} features, expected {width})")
            inst = row[0].strip()
            if inst in out:
                raise DataError(f"{path}:{lineno}: duplicate instance id {inst!r}")
            cells = [c.strip() for c in row[1:]]
            missing = np.array([c == "" for c in cells])
            values = np.array([np.nan if c == "" else _parse_float(c, f"{path}:{lineno}") for c in cells])
            out[inst] = InstanceFeatures(inst, values, missing)
    return out


def feature_names(path) -> List[str]:
    with open(path, newline="") as fh:
        return next(csv.reader(fh))[1:]
