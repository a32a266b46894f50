"""Command-line interface for the traffic simulator pipeline.

Subcommands cover the full workflow: calibrate-fd fits the speed-density
curve to counter data, simulate runs one signal configuration, gen-dataset
samples many random configurations into a CSV table, train-surrogate fits a
predictive model on such a table, optimize searches for good timings against
a surrogate (or the simulator directly), and validate re-simulates a
configuration file under the standard protocol.
"""
from __future__ import annotations

import argparse
import json
import sys

from . import dataset, fundamental, optimizer, signals, solver, surrogate
from .network import NetworkError, load_network


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="macrosim",
        description="Macroscopic road-traffic simulation and signal-timing optimization",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate-fd", help="fit the speed-density curve to counter data")
    p.add_argument("--counters", required=True, help="CSV with header interval_s,count,avg_speed_mps")
    p.add_argument("--fix-vmax", type=float, default=None, help="hold the free-flow speed fixed")
    p.add_argument("--out", required=True, help="output JSON with the fitted parameters")

    p = sub.add_parser("simulate", help="run one simulation and report congestion metrics")
    _add_sim_args(p)
    p.add_argument("--heatmap", default=None, help="path prefix for per-probe density exports")
    p.add_argument("--probes", default=None, help="comma-separated snapshot times in seconds")
    p.add_argument("--out", required=True, help="output JSON with the aggregated metrics")

    p = sub.add_parser("gen-dataset", help="simulate many random signal configurations")
    _add_sim_args(p, lights=False)
    p.add_argument("--runs", type=int, required=True, help="number of configurations to sample")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (results are identical for any count)")
    p.add_argument("--out", required=True, help="output CSV table")

    p = sub.add_parser("train-surrogate", help="fit a surrogate model on a dataset table")
    p.add_argument("--data", required=True, help="dataset CSV from gen-dataset")
    p.add_argument("--model", choices=["linear", "mlp"], required=True)
    p.add_argument("--target", choices=["speed", "queue", "both"], default="both")
    p.add_argument("--folds", type=int, default=5, help="cross-validation folds")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid", action="store_true", help="mlp only: search the small training grid first")
    p.add_argument("--out", required=True, help="output JSON model file")

    p = sub.add_parser("optimize", help="search for good signal timings")
    p.add_argument("--network", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--model", help="surrogate model file to optimize against")
    group.add_argument("--direct", action="store_true", help="evaluate candidates by full simulation")
    p.add_argument("--objective", choices=["speed", "queue"], required=True)
    p.add_argument("--data", required=True, help="training dataset CSV; best row seeds the search")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--init", default=None, help="initial speeds CSV (required for --direct or --validate)")
    p.add_argument("--init-noise", type=float, default=0.05)
    p.add_argument("--state-seed", type=int, default=0, help="seed of the shared initial state")
    p.add_argument("--generations", type=int, default=300)
    p.add_argument("--pop", type=int, default=None, help="population size (default 15 x dim, max 150)")
    p.add_argument("--horizon", type=float, default=340.0)
    p.add_argument("--warmup", type=float, default=100.0)
    p.add_argument("--dt", type=float, default=0.5)
    p.add_argument("--validate", action="store_true", help="re-simulate the optimized configuration")
    p.add_argument("--out", required=True, help="output JSON signal configuration")
    p.add_argument("--report", default=None, help="optional JSON run report")

    p = sub.add_parser("validate", help="re-simulate a configuration under the standard protocol")
    _add_sim_args(p)
    p.add_argument("--out", required=True, help="output JSON with the simulated metrics")

    return parser


def _add_sim_args(p: argparse.ArgumentParser, lights: bool = True) -> None:
    p.add_argument("--network", required=True, help="road network JSON")
    p.add_argument("--init", required=True, help="initial speeds CSV (edge_id,speed_mps; * = default)")
    if lights:
        p.add_argument("--lights", default=None, help="signal configuration JSON")
    p.add_argument("--horizon", type=float, default=340.0)
    p.add_argument("--warmup", type=float, default=100.0)
    p.add_argument("--dt", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0, help="seed of the initialization noise")
    p.add_argument("--init-noise", type=float, default=0.05)


def _initial_state(args, net):
    speeds, default = solver.read_speeds_csv(args.init)
    params = solver.SimParams(dt_s=args.dt, seed=args.seed, init_noise=args.init_noise)
    state0 = solver.initialize(net, speeds, params, default_speed=default)
    return state0, params


def _cmd_calibrate_fd(args) -> int:
    counters = fundamental.read_counters(args.counters)
    samples = fundamental.samples_from_counters(counters)
    fit = fundamental.fit_fd(samples, fixed_v_max=args.fix_vmax)
    fundamental.save_fit(fit, args.out)
    status = "converged" if fit.converged else "NOT converged (iteration cap hit)"
    print(
        f"fitted v_max={fit.params.v_max:.4f} m/s rho_cr={fit.params.rho_cr:.5f} cars/m "
        f"a={fit.params.a:.4f} sse={fit.sse:.6g} [{status}] -> {args.out}"
    )
    return 0


def _cmd_simulate(args) -> int:
    net = load_network(args.network)
    state0, params = _initial_state(args, net)
    config = signals.load_config(args.lights) if args.lights else None
    probes = [float(t) for t in args.probes.split(",")] if args.probes else None
    result = solver.run(net, state0, config, params, horizon=args.horizon, warmup=args.warmup, probes=probes)
    solver.write_metrics_json(result, args.out)
    if args.heatmap:
        for snap in result.snapshots:
            base = f"{args.heatmap}_t{snap.t:g}"
            solver.write_heatmap_csv(net, snap, base + ".csv")
            solver.write_heatmap_pgm(net, snap, base + ".pgm", params.jam_density)
        if result.snapshots:
            print(f"wrote {len(result.snapshots)} heatmap snapshot(s) to {args.heatmap}_t*.csv/.pgm")
    print(
        f"avg_speed={result.metrics.avg_speed:.4f} m/s queue_length={result.metrics.queue_length:.4f} "
        f"({result.metrics.samples} samples) -> {args.out}"
    )
    return 0


def _cmd_gen_dataset(args) -> int:
    net = load_network(args.network)
    state0, params = _initial_state(args, net)
    rows = dataset.generate(
        net, state0, params, n_runs=args.runs, seed=args.seed, workers=args.jobs,
        horizon=args.horizon, warmup=args.warmup,
    )
    dataset.write_csv(rows, args.out)
    failed = sum(1 for r in rows if not r.ok)
    print(f"wrote {len(rows)} runs ({failed} failed) -> {args.out}")
    return 0


def _cmd_train_surrogate(args) -> int:
    rows = dataset.read_csv(args.data)
    X, Y, ids = dataset.feature_matrix(rows)
    targets = {"speed": ("avg_speed",), "queue": ("queue_length",), "both": ("avg_speed", "queue_length")}[args.target]
    columns = {"speed": [0], "queue": [1], "both": [0, 1]}[args.target]
    Yt = Y[:, columns]

    if args.model == "linear":
        def fit(Xt, Yf):
            return surrogate.fit_linear(Xt, Yf, targets=targets, feature_ids=ids)
    else:
        hyper = surrogate.MlpHyper()
        if args.grid:
            hyper, _ = surrogate.grid_search_mlp(X, Yt, seed=args.seed, k=args.folds)
            print(
                f"grid best: activation={hyper.activation} alpha={hyper.alpha} "
                f"learning_rate={hyper.learning_rate}"
            )

        def fit(Xt, Yf):
            return surrogate.fit_mlp(Xt, Yf, hyper, seed=args.seed, targets=targets, feature_ids=ids)

    per_target, mean_rmse = surrogate.kfold_rmse(fit, X, Yt, k=args.folds, seed=args.seed)
    model = fit(X, Yt)
    surrogate.save_model(model, args.out)
    named = ", ".join(f"{t}={r:.6g}" for t, r in zip(targets, per_target))
    print(f"{args.folds}-fold RMSE: {named} (mean {mean_rmse:.6g}) -> {args.out}")
    return 0


def _cmd_optimize(args) -> int:
    net = load_network(args.network)
    rows = dataset.read_csv(args.data)
    de = optimizer.DeConfig(pop_size=args.pop, max_generations=args.generations, seed=args.seed)

    state0 = None
    params = solver.SimParams(dt_s=args.dt, seed=args.state_seed, init_noise=args.init_noise)
    if args.init:
        speeds, default = solver.read_speeds_csv(args.init)
        state0 = solver.initialize(net, speeds, params, default_speed=default)

    if args.direct:
        if state0 is None:
            print("error: --direct needs --init to build the shared initial state", file=sys.stderr)
            return 1
        objective = optimizer.simulation_objective(
            net, state0, params, args.objective, horizon=args.horizon, warmup=args.warmup
        )
    else:
        model = surrogate.load_model(args.model)
        objective = optimizer.surrogate_objective(model, args.objective)

    result = optimizer.optimize_config(net, objective, de, training_rows=rows)
    signals.save_config(result.config, args.out)

    simulated = None
    if args.validate:
        if state0 is None:
            print("error: --validate needs --init to build the shared initial state", file=sys.stderr)
            return 1
        metrics = optimizer.validate_config(
            net, state0, params, result.config, horizon=args.horizon, warmup=args.warmup
        )
        simulated = {"avg_speed_mps": metrics.avg_speed, "queue_length": metrics.queue_length}

    report = {
        "objective": result.objective,
        "direction": result.direction,
        "predicted": result.predicted,
        "simulated": simulated,
        "generations": result.de.generations,
        "evaluations": result.de.evaluations,
        "converged": result.de.converged,
    }
    if args.report:
        with open(args.report, "w") as fh:
            json.dump(report, fh, indent=2)
            fh.write("\n")
    verb = "max" if result.direction == "maximize" else "min"
    line = f"optimized {result.objective} ({verb}): predicted={result.predicted:.4f}"
    if simulated:
        line += f" simulated avg_speed={simulated['avg_speed_mps']:.4f} queue={simulated['queue_length']:.4f}"
    print(line + f" after {result.de.evaluations} evaluations -> {args.out}")
    return 0


def _cmd_validate(args) -> int:
    net = load_network(args.network)
    state0, params = _initial_state(args, net)
    config = signals.load_config(args.lights) if args.lights else None
    metrics = optimizer.validate_config(net, state0, params, config, horizon=args.horizon, warmup=args.warmup)
    doc = {
        "avg_speed_mps": metrics.avg_speed,
        "queue_length": metrics.queue_length,
        "samples": metrics.samples,
    }
    with open(args.out, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    print(f"avg_speed={metrics.avg_speed:.4f} m/s queue_length={metrics.queue_length:.4f} -> {args.out}")
    return 0


_HANDLERS = {
    "calibrate-fd": _cmd_calibrate_fd,
    "simulate": _cmd_simulate,
    "gen-dataset": _cmd_gen_dataset,
    "train-surrogate": _cmd_train_surrogate,
    "optimize": _cmd_optimize,
    "validate": _cmd_validate,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except (NetworkError, dataset.DatasetError, surrogate.SurrogateError, solver.SimulationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
