"""Command-line pipeline: synth -> ingest -> curves -> analyze -> policy-eval, plus
train/predict/cv for the core-count model and race/collect for real solvers.

Every stage reads and writes CSV (the model is JSON).  Output goes to
``--out`` or stdout.  Exit codes: 0 success, 1 race with no winner,
2 usage, data or spawn error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import distribution as dist
from . import orchestrator as orch
from . import policy as pol
from . import predictor as pred
from . import runtime_data as rd
from . import tradeoff as tr

DEFAULT_TIMEOUT = 3600.0
DEFAULT_SLACK = ",".join(f"{i * 0.05:.2f}" for i in range(11))

GRID_HELP = "core-count grid: a range '1..100' (optionally ':step') or a list '1,2,4,8' (default 1..100)"


class UsageError(Exception):
    pass


def _emit(text: str, out):
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _seed_list(spec: str):
    # seeds may start at 0, unlike core counts
    out = []
    for part in spec.split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..")
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    return out


# --------------------------------------------------------------------------
# subcommands

def cmd_ingest(a):
    m = rd.load_runtime_csv(a.runtimes, a.timeout)
    if a.filter:
        m = rd.filter_instances(m, a.easy_threshold)
    _emit(rd.format_runtime_csv(m), a.out)
    print(f"{len(m)} instance(s), {m.seed_count} seed(s) each", file=sys.stderr)


def cmd_curves(a):
    m = rd.load_runtime_csv(a.runtimes, a.timeout)
    grid = tr.parse_grid(a.grid)
    method = "exact" if a.method == "exact" else "montecarlo"
    curves = [tr.compute_curve(d, grid, method, a.iterations, a.seed, inst)
              for inst, d in rd.distributions(m).items()]
    _emit(tr.format_curves_csv(curves), a.out)


def cmd_analyze(a):
    curves = tr.load_curves_csv(a.curves)
    frontiers = {c.instance: tr.pareto_frontier(c) for c in curves}
    slack = tr.aggregate_slack_curve(curves, [float(x) for x in a.slack.split(",")], a.geometric)
    best = [(c.instance, *tr.min_energy_cores(c)) for c in curves]
    minimal = "instance,k,energy\n" + "".join(f"{i},{k},{e!r}\n" for i, k, e in best)
    if a.out_dir:
        os.makedirs(a.out_dir, exist_ok=True)
        _emit(tr.format_frontier_csv(frontiers), os.path.join(a.out_dir, "frontier.csv"))
        _emit(tr.format_slack_csv(slack), os.path.join(a.out_dir, "slack.csv"))
        _emit(minimal, os.path.join(a.out_dir, "min_energy.csv"))
    else:
        sys.stdout.write(tr.format_frontier_csv(frontiers) + "\n" + minimal + "\n" + tr.format_slack_csv(slack))
    ks = sorted(k for _, k, _ in best)
    print(f"{len(curves)} curve(s); median energy-optimal k = {ks[len(ks) // 2]}", file=sys.stderr)


def cmd_policy_eval(a):
    curves = tr.load_curves_csv(a.curves)
    predictions = pred.load_predictions_csv(a.predictions) if a.predictions else None
    table = pol.evaluation_table(pol.parse_policies(a.policies, predictions), curves)
    if a.out:
        _emit(pol.format_table_csv(table), a.out)
    if a.detail:
        _emit(pol.format_detail_csv(table), a.detail)
    sys.stdout.write(pol.format_table_text(table))


def _dataset(a):
    features = rd.load_features_csv(a.features)
    labels = pred.extract_labels(tr.load_curves_csv(a.curves))
    return pred.build_dataset(features, labels)


def _config(a):
    return pred.ForestConfig(tree_count=a.trees, features_per_split=a.features_per_split,
                             min_leaf=a.min_leaf, rng_seed=a.seed, log_target=a.log_target)


def cmd_train(a):
    model = pred.train_forest(_dataset(a), _config(a))
    model.save(a.model)
    print(f"trained {model.tree_count} trees on {model.feature_width} features -> {a.model}", file=sys.stderr)


def cmd_predict(a):
    model = pred.ForestModel.load(a.model)
    features = rd.load_features_csv(a.features)
    preds = {i: model.predict(f.values) for i, f in features.items()}
    _emit(pred.format_predictions_csv(preds, tr.parse_grid(a.grid)), a.out)


def cmd_cv(a):
    ds = _dataset(a)
    report = pred.cross_validate(ds, _config(a), folds=a.folds)
    if a.predictions:
        _emit(pred.format_predictions_csv(report.predictions, tr.parse_grid(a.grid)), a.predictions)
    _emit(json.dumps(report.to_dict(), indent=2) + "\n", a.report)


def _command(a):
    if a.cmd == "sleeper":
        return orch.sleeper_command(success_codes=frozenset(a.success_codes))
    return orch.SolverCommand(a.cmd, success_codes=frozenset(a.success_codes))


def cmd_race(a):
    result = orch.race(_command(a), a.instance, _seed_list(a.seeds), a.timeout)
    line = json.dumps(result.log_record(a.instance))
    print(line)
    if a.log:
        with open(a.log, "a") as fh:
            fh.write(line + "\n")
    return 0 if result.won else 1


def cmd_collect(a):
    m = orch.collect_matrix(_command(a), a.instances, _seed_list(a.seeds), a.timeout,
                            a.parallelism, out_path=a.out, resume=a.resume)
    if not a.out:
        sys.stdout.write(rd.format_runtime_csv(m))


def _synth_kind(a):
    k = a.kind
    if k == "constant":
        return dist.Constant(a.c)
    if k == "uniform":
        return dist.UniformDiscrete(a.lo, a.hi)
    if k == "lognormal":
        return dist.LogNormal(a.mu, a.sigma)
    if k == "pareto":
        return dist.ParetoTail(a.xmin, a.alpha)
    if k == "twopoint":
        return dist.TwoPoint(a.t_fast, a.p_fast, a.t_slow if a.t_slow is not None else a.timeout)
    if k == "bimodal":
        return dist.Bimodal(a.mu, a.mu2, a.sigma, a.mix)
    raise UsageError(f"unknown kind {k}")


def cmd_synth(a):
    kind = _synth_kind(a)
    width = len(str(a.instances - 1))
    dists = {}
    for j in range(a.instances):
        inst = f"{a.prefix}{j:0{width}d}"
        spec = dist.SyntheticSpec(kind, a.n, a.timeout, dist.stream_seed(a.seed, inst))
        dists[inst] = dist.generate_synthetic(spec, inst)
    _emit(rd.format_runtime_csv(rd.matrix_from_distributions(dists)), a.out)


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="elasticsolve", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help):
        sp = sub.add_parser(name, help=help, description=help)
        sp.set_defaults(func=fn)
        return sp

    s = add("ingest", cmd_ingest, "validate, normalise and optionally filter a runtimes CSV")
    s.add_argument("--runtimes", required=True)
    s.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT, help="timeout cap in seconds (default 3600)")
    s.add_argument("--filter", action="store_true", help="drop never-solved and always-easy instances")
    s.add_argument("--easy-threshold", type=float, default=1.0)
    s.add_argument("--out")

    s = add("curves", cmd_curves, "expected time / energy / success per core count")
    s.add_argument("--runtimes", required=True)
    s.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT)
    s.add_argument("--method", choices=["exact", "mc"], default="exact")
    s.add_argument("--grid", default="1..100", help=GRID_HELP)
    s.add_argument("--iterations", type=int, default=dist.DEFAULT_ITERATIONS)
    s.add_argument("--seed", type=int, default=0, help="master seed for --method mc")
    s.add_argument("--out")

    s = add("analyze", cmd_analyze, "Pareto frontiers, energy-optimal k and the slack curve")
    s.add_argument("--curves", required=True)
    s.add_argument("--slack", default=DEFAULT_SLACK, help="comma-separated epsilons")
    s.add_argument("--geometric", action="store_true", help="geometric instead of arithmetic mean")
    s.add_argument("--out-dir", help="write frontier.csv, min_energy.csv and slack.csv here")

    s = add("policy-eval", cmd_policy_eval, "evaluate core-count policies")
    s.add_argument("--curves", required=True)
    s.add_argument("--policies", default="fixed:1,fixed:2,fixed:4,fixed:8,fixed:100,vb-energy,vb-solved",
                   help="comma list of fixed:K, vb-energy, vb-solved, predicted")
    s.add_argument("--predictions", help="predictions CSV for the 'predicted' policy")
    s.add_argument("--out", help="policy table CSV")
    s.add_argument("--detail", help="per-instance detail CSV")

    for name, fn, help in (("train", cmd_train, "fit the core-count forest"),
                           ("predict", cmd_predict, "predict core counts from features"),
                           ("cv", cmd_cv, "stratified k-fold cross-validation")):
        s = add(name, fn, help)
        s.add_argument("--features", required=True)
        if name != "predict":
            s.add_argument("--curves", required=True)
            s.add_argument("--trees", type=int, default=100)
            s.add_argument("--features-per-split", type=int)
            s.add_argument("--min-leaf", type=int, default=1)
            s.add_argument("--seed", type=int, default=0)
            s.add_argument("--log-target", action="store_true", help="regress log2(k)")
        if name != "cv":
            s.add_argument("--model", required=True)
        if name != "train":
            s.add_argument("--grid", default="1..100", help=GRID_HELP)
        if name == "predict":
            s.add_argument("--out")
        if name == "cv":
            s.add_argument("--folds", type=int, default=10)
            s.add_argument("--report", help="JSON report path (default stdout)")
            s.add_argument("--predictions", help="out-of-fold predictions CSV")

    for name, fn, help in (("race", cmd_race, "race seeded solver copies, first success wins"),
                           ("collect", cmd_collect, "run every instance/seed pair to build a runtimes CSV")):
        s = add(name, fn, help)
        s.add_argument("--cmd", required=True,
                       help="command template with {instance} and {seed}; 'sleeper' runs the bundled fixture")
        s.add_argument("--seeds", required=True, help="'0..99' or '1,5,9'")
        s.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT, help="wall-clock seconds per run")
        s.add_argument("--success-codes", type=lambda v: [int(x) for x in v.split(",")], default=[10, 20])
        if name == "race":
            s.add_argument("--instance", required=True)
            s.add_argument("--log", help="append the JSON race record here")
        else:
            s.add_argument("--instances", nargs="+", required=True)
            s.add_argument("--parallelism", type=int, default=1)
            s.add_argument("--out")
            s.add_argument("--resume", action="store_true", help="skip pairs already in --out")

    s = add("synth", cmd_synth, "generate a synthetic runtimes CSV")
    s.add_argument("--kind", required=True, choices=["constant", "uniform", "lognormal", "pareto", "twopoint", "bimodal"])
    s.add_argument("--n", type=int, default=100, help="runs (seeds) per instance")
    s.add_argument("--instances", type=int, default=1)
    s.add_argument("--prefix", default="synth-")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT)
    s.add_argument("--c", type=float, default=5.0)
    s.add_argument("--lo", type=int, default=1)
    s.add_argument("--hi", type=int, default=100)
    s.add_argument("--mu", type=float, default=3.0)
    s.add_argument("--mu2", type=float, default=7.0)
    s.add_argument("--sigma", type=float, default=1.0)
    s.add_argument("--mix", type=float, default=0.5)
    s.add_argument("--xmin", type=float, default=1.0)
    s.add_argument("--alpha", type=float, default=0.5)
    s.add_argument("--t-fast", type=float, default=1.0)
    s.add_argument("--p-fast", type=float, default=0.5)
    s.add_argument("--t-slow", type=float)
    s.add_argument("--out")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    a = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING, format="%(message)s")
    try:
        return a.func(a) or 0
    except FileNotFoundError as exc:
        print(f"error: no such file: {exc.filename}", file=sys.stderr)
    except (rd.DataError, pol.PolicyError, orch.TemplateError, orch.SpawnError, UsageError,
            ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return 2


if __name__ == "__main__":
    sys.exit(main())
