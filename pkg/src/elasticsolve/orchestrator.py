"""Race seeded copies of an external solver and collect runtime matrices.

Children are started in their own session so a whole process group can be
signalled.  Each child is reaped with ``os.wait4`` which also yields the
kernel's CPU accounting (user + system time) for it.
"""
from __future__ import annotations

import csv
import json
import logging
import os
import shlex
import signal
import subprocess
import sys
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .runtime_data import RUNTIME_HEADER, RunOutcome, RuntimeMatrix, Status, write_runtime_csv

log = logging.getLogger(__name__)

DEFAULT_SUCCESS_CODES = frozenset({10, 20})
GRACE_SECONDS = 2.0
POLL_SECONDS = 0.005

WON, CANCELLED, TIMEOUT, CRASHED = "won", "cancelled", "timeout", "crashed"


class TemplateError(ValueError):
    pass


class SpawnError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverCommand:
    """Command template with ``{instance}`` and ``{seed}`` placeholders."""

    template: str
    cwd: Optional[str] = None
    env: Mapping[str, str] = field(default_factory=dict)
    success_codes: frozenset = DEFAULT_SUCCESS_CODES

    def __post_init__(self):
        for ph in ("{instance}", "{seed}"):
            if ph not in self.template:
                raise TemplateError(f"command template lacks {ph}")

    def argv(self, instance, seed) -> List[str]:
        try:
            args = [tok.format(instance=instance, seed=seed) for tok in shlex.split(self.template)]
        except (KeyError, IndexError, ValueError) as exc:
            raise TemplateError(f"cannot substitute template {self.template!r}: {exc}") from None
        if not args:
            raise TemplateError("empty command")
        return args


def sleeper_command(**kwargs) -> SolverCommand:
    """Command running the bundled sleeper fixture with the current interpreter."""
    path = os.path.join(os.path.dirname(__file__), "sleeper.py")
    return SolverCommand(f"{shlex.quote(sys.executable)} {shlex.quote(path)} {{instance}} {{seed}}", **kwargs)


@dataclass
class ProcessRecord:
    seed: int
    status: str
    cpu_time: float
    exit_code: Optional[int] = None
    wall_time: float = 0.0
    error: Optional[str] = None


@dataclass
class RaceResult:
    winner: Optional[int]
    wall_time: float
    per_process: List[ProcessRecord]
    cpu_from_rusage: bool = True

    @property
    def won(self) -> bool:
        return self.winner is not None

    @property
    def total_energy(self) -> float:
        return sum(p.cpu_time for p in self.per_process)

    def log_record(self, instance) -> Dict:
        return {"instance": str(instance), "seeds": [p.seed for p in self.per_process],
                "winner": self.winner, "wall": self.wall_time, "energy": self.total_energy}


class _Child:
    def __init__(self, seed, argv, cmd: SolverCommand):
        self.seed = seed
        self.status = None
        self.exit_code = None
        self.cpu = 0.0
        self.error = None
        self.end = None
        self.start = time.monotonic()
        env = dict(os.environ, **cmd.env) if cmd.env else None
        try:
            self.proc = subprocess.Popen(argv, cwd=cmd.cwd, env=env, stdin=subprocess.DEVNULL,
                                         stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL,
                                         start_new_session=True)
        except OSError as exc:
            self.proc = None
            self.status = CRASHED
            self.error = f"spawn failed: {exc}"
            self.end = self.start

    @property
    def alive(self):
        return self.proc is not None and self.exit_code is None

    def reap(self, block=False) -> bool:
        """Collect the exit status if the child has exited; True once reaped."""
        if not self.alive:
            return True
        try:
            pid, status, usage = os.wait4(self.proc.pid, 0 if block else os.WNOHANG)
        except ChildProcessError:
            return True
        if pid == 0:
            return False
        self.end = time.monotonic()
        self.exit_code = os.waitstatus_to_exitcode(status)
        self.proc.returncode = self.exit_code
        self.cpu = usage.ru_utime + usage.ru_stime
        self._killpg(signal.SIGKILL)  # stray descendants
        return True

    def _killpg(self, sig):
        try:
            os.killpg(self.proc.pid, sig)
        except (ProcessLookupError, PermissionError):
            pass

    def signal(self, sig):
        if self.alive:
            self._killpg(sig)


def _terminate(children: Sequence[_Child], status: str, grace: float = GRACE_SECONDS):
    """SIGTERM, wait up to ``grace``, then SIGKILL; marks every child with ``status``.

    Safe to call on children that have already exited.
    """
    for ch in children:
        ch.signal(signal.SIGTERM)
    deadline = time.monotonic() + grace
    pending = [ch for ch in children if not ch.reap()]
    while pending and time.monotonic() < deadline:
        time.sleep(POLL_SECONDS)
        pending = [ch for ch in pending if not ch.reap()]
    for ch in pending:
        ch.signal(signal.SIGKILL)
        ch.reap(block=True)
    for ch in children:
        ch.status = status


def _record(ch: _Child) -> ProcessRecord:
    return ProcessRecord(ch.seed, ch.status, ch.cpu, ch.exit_code,
                         (ch.end or time.monotonic()) - ch.start, ch.error)


def race(cmd: SolverCommand, instance, seeds: Sequence[int], timeout: float,
         grace: float = GRACE_SECONDS) -> RaceResult:
    """Run one child per seed; the first to exit with a success code wins.

    Losers are cancelled as soon as a winner is reaped.  Children exceeding
    ``timeout`` wall-clock seconds are terminated and marked ``timeout``;
    failing exits are marked ``crashed`` and leave the race running.
    """
    seeds = list(seeds)
    if not seeds:
        raise ValueError("race needs at least one seed")
    if len(set(seeds)) != len(seeds):
        raise ValueError("seeds must be distinct")
    argvs = [cmd.argv(instance, s) for s in seeds]

    t0 = time.monotonic()
    children = [_Child(s, a, cmd) for s, a in zip(seeds, argvs)]
    if all(ch.proc is None for ch in children):
        raise SpawnError("; ".join(f"seed {ch.seed}: {ch.error}" for ch in children))

    winner = None
    wall = None
    try:
        live = [ch for ch in children if ch.alive]
        while live and winner is None:
            now = time.monotonic()
            expired = []
            for ch in live:
                if ch.reap():
                    if ch.exit_code not in cmd.success_codes:
                        ch.status = CRASHED
                    elif winner is None:
                        winner, wall = ch, ch.end - t0
                        ch.status = WON
                    else:
                        # succeeded in the same sweep as the winner
                        ch.status = CANCELLED
                elif now - ch.start > timeout:
                    expired.append(ch)
            if expired:
                _terminate(expired, TIMEOUT, grace)
            live = [ch for ch in live if ch.alive]
            if winner is None and live:
                time.sleep(POLL_SECONDS)
    finally:
        rest = [ch for ch in children if ch.alive]
        if rest:
            _terminate(rest, CANCELLED, grace)
    if wall is None:
        wall = time.monotonic() - t0
    result = RaceResult(winner.seed if winner else None, wall, [_record(ch) for ch in children])
    log.info(json.dumps(result.log_record(instance)))
    return result


def run_once(cmd: SolverCommand, instance, seed: int, timeout: float,
             grace: float = GRACE_SECONDS) -> ProcessRecord:
    """Supervise a single run to completion or timeout."""
    ch = _Child(seed, cmd.argv(instance, seed), cmd)
    try:
        while ch.alive:
            if ch.reap():
                break
            if time.monotonic() - ch.start > timeout:
                _terminate([ch], TIMEOUT, grace)
                break
            time.sleep(POLL_SECONDS)
    finally:
        if ch.alive:
            _terminate([ch], CANCELLED, grace)
    if ch.status is None:
        ch.status = WON if ch.exit_code in cmd.success_codes else CRASHED
    return _record(ch)


def _outcome(rec: ProcessRecord, timeout: float) -> RunOutcome:
    if rec.status == WON:
        return RunOutcome(Status.SOLVED, min(max(rec.wall_time, 1e-9), float(timeout)))
    if rec.status == TIMEOUT:
        return RunOutcome(Status.TIMEOUT, float(timeout))
    return RunOutcome(Status.CRASHED, float(timeout))


def _read_partial(path) -> Dict[Tuple[str, int], RunOutcome]:
    done = {}
    if not os.path.exists(path):
        return done
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader, None)
        for row in reader:
            if len(row) != 4:
                continue  # torn final line of an interrupted run
            try:
                done[(row[0], int(row[1]))] = RunOutcome(Status(row[2]), float(row[3]))
            except ValueError:
                continue
    return done


def collect_matrix(cmd: SolverCommand, instances: Sequence, seeds: Sequence[int], timeout: float,
                   parallelism: int = 1, out_path=None, resume: bool = False,
                   grace: float = GRACE_SECONDS) -> RuntimeMatrix:
    """Run every (instance, seed) pair to completion or timeout.

    Solved runs record their wall-clock time.  With ``out_path`` each row is
    appended as it completes; ``resume=True`` skips pairs already present
    there.  The file is rewritten in canonical order at the end.
    """
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    instances = [str(i) for i in instances]
    seeds = [int(s) for s in seeds]
    for inst in instances:
        cmd.argv(inst, seeds[0] if seeds else 0)

    done = _read_partial(out_path) if (out_path and resume) else {}
    todo = [(i, s) for i in instances for s in seeds if (i, s) not in done]

    lock = threading.Lock()
    sink = None
    if out_path:
        fresh = not (resume and os.path.exists(out_path))
        sink = open(out_path, "w" if fresh else "a", newline="")
        if fresh:
            sink.write(",".join(RUNTIME_HEADER) + "\n")
            sink.flush()

    def job(pair):
        inst, seed = pair
        try:
            rec = run_once(cmd, inst, seed, timeout, grace)
        except (OSError, TemplateError) as exc:
            log.warning("run %s seed %s failed: %s", inst, seed, exc)
            rec = ProcessRecord(seed, CRASHED, 0.0, error=str(exc))
        out = _outcome(rec, timeout)
        if sink:
            with lock:
                csv.writer(sink, lineterminator="\n").writerow(
                    [inst, seed, out.status.value, repr(float(out.time))])
                sink.flush()
        return pair, out

    try:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            for pair, out in pool.map(job, todo):
                done[pair] = out
    finally:
        if sink:
            sink.close()

    entries = {inst: [(s, done[(inst, s)]) for s in sorted(seeds)] for inst in instances}
    matrix = RuntimeMatrix(float(timeout), entries)
    if out_path:
        write_runtime_csv(matrix, out_path)
    return matrix
