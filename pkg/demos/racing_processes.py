"""
Racing seeded solver processes
==============================

The orchestrator starts one process per seed and cancels the rest as soon
as one exits with a success code (10/20 by default, as SAT solvers do).
Energy is the summed CPU time of all processes.  The bundled sleeper
fixture stands in for a real solver; substitute e.g.
``SolverCommand("minisat -rnd-seed={seed} {instance}")``.
"""

import json
import tempfile

from elasticsolve.orchestrator import collect_matrix, race, sleeper_command
from elasticsolve.runtime_data import distribution_of
from elasticsolve.tradeoff import compute_curve, min_energy_cores

##############################################################################
# A fake instance: seed 3 is fast, the others burn CPU for a while.

with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as fh:
    json.dump({"durations": {"3": 0.3}, "default": 1.5, "mode": "burn"}, fh)
    instance = fh.name

result = race(sleeper_command(), instance, seeds=[0, 1, 2, 3], timeout=10)
print("winner seed:", result.winner, f"after {result.wall_time:.2f}s wall")
for p in result.per_process:
    print(f"  seed {p.seed}: {p.status:<9} cpu {p.cpu_time:.2f}s")
print(f"energy: {result.total_energy:.2f} core-seconds")

##############################################################################
# Collecting a runtime matrix runs every seed to completion instead, which
# is what the curve and policy machinery consumes.

with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as fh:
    json.dump({"durations": {"0": 0.05, "1": 0.4, "2": 0.1, "3": 5.0}, "default": 0.2}, fh)
    sleepy = fh.name

m = collect_matrix(sleeper_command(), [sleepy], seeds=range(6), timeout=1.0, parallelism=3)
d = distribution_of(m, sleepy)
print("collected times:", [round(float(t), 2) for t in d.sorted_times], f"({d.timeout_count} timeout)")
# process start-up time is part of every measured runtime
print("energy-optimal k:", min_energy_cores(compute_curve(d, range(1, 7)))[0])
