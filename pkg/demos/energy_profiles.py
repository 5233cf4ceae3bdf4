"""
Energy versus core count for different runtime distributions
============================================================

Running ``k`` seeded copies of a randomized solver and stopping at the
first success costs ``k * s_k`` core-seconds, where ``s_k`` is the expected
minimum of ``k`` runtimes.  Whether extra cores save or waste energy
depends entirely on the shape of the runtime distribution.
"""

from elasticsolve import (Constant, LogNormal, ParetoTail, SyntheticSpec, TwoPoint, UniformDiscrete,
                          compute_curve, generate_synthetic, min_energy_cores, pareto_frontier)

GRID = range(1, 101)

kinds = {
    "constant 5 s": Constant(5.0),
    "uniform 1..100 s": UniformDiscrete(1, 100),
    "lognormal sigma=2": LogNormal(3.0, 2.0),
    "pareto alpha=0.5": ParetoTail(1.0, 0.5),
    "1 s or timeout": TwoPoint(1.0, 0.5, 3600.0),
}

##############################################################################
# Expected time and energy at a few core counts, plus the energy optimum.

print(f"{'distribution':<20} {'s_1':>9} {'s_8':>9} {'s_100':>9} {'k*':>4} {'E(k*)':>10} {'E(1)':>10}")
curves = {}
for name, kind in kinds.items():
    d = generate_synthetic(SyntheticSpec(kind, sample_size=100, timeout_cap=3600.0, rng_seed=1))
    c = compute_curve(d, GRID, instance=name)
    curves[name] = c
    k, e = min_energy_cores(c)
    print(f"{name:<20} {c.point(1).expected_time:>9.2f} {c.point(8).expected_time:>9.2f} "
          f"{c.point(100).expected_time:>9.2f} {k:>4} {e:>10.2f} {c.point(1).energy:>10.2f}")

##############################################################################
# Uniform-ish runtimes: adding cores only adds energy.  Heavy tails: the
# optimum moves to many cores and saves orders of magnitude.
#
# The Pareto frontier lists the core counts worth considering when both
# time and energy matter.

for name, c in curves.items():
    front = pareto_frontier(c)
    print(f"{name:<20} frontier k = {[p.k for p in front][:12]}{' ...' if len(front) > 12 else ''}")
