"""Command-line interface.

Subcommands: gen (terrain -> scenario), plan, topo, power, simulate, train,
report. Exit codes: 0 success, 2 validation/parse failure, 3 infeasibility.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np
import torch

from .errors import (DeadEnd, InfeasibleBudget, InfeasibleTopology, InstanceTooLarge,
                     ParseError, TimeBudgetExceeded, ValidationError, ZeroDistance)
from .kinematics import TrajectorySet, positions_over_slots
from .scenario import load_scenario, save_scenario

_INFEASIBLE = (InfeasibleTopology, InfeasibleBudget, TimeBudgetExceeded, DeadEnd,
               InstanceTooLarge, ZeroDistance)


def _common_flags(sub: argparse.ArgumentParser, scenario: bool = True) -> None:
    if scenario:
        sub.add_argument("--scenario", required=True, help="scenario JSON file")
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--out", default=".", help="output directory")


def _load_plan_routes(path, scenario) -> TrajectorySet:
    with open(path) as f:
        doc = json.load(f)
    return TrajectorySet(routes=tuple(tuple(r) for r in doc["routes"]),
                         num_starts=scenario.num_starts,
                         num_waypoints=scenario.num_waypoints)


def _plan_or_default(args, scenario) -> TrajectorySet:
    from .simulator import plan_routes
    if getattr(args, "plan", None):
        return _load_plan_routes(args.plan, scenario)
    return plan_routes(scenario, "heuristic", args.seed)


def cmd_gen(args) -> int:
    scenario = load_scenario(args.scenario)
    os.makedirs(args.out, exist_ok=True)
    out_path = os.path.join(args.out, "scenario.json")
    save_scenario(scenario, out_path)
    print(f"wrote {out_path} ({scenario.num_waypoints} waypoints, "
          f"{scenario.num_uavs} uavs)")
    return 0


def cmd_plan(args) -> int:
    from .simulator import plan_routes
    scenario = load_scenario(args.scenario)
    traj = plan_routes(scenario, args.planner, args.seed, model_path=args.model)
    os.makedirs(args.out, exist_ok=True)
    out_path = os.path.join(args.out, "plan.json")
    doc = {"routes": [list(r) for r in traj.routes],
           "total_length_m": traj.total_length(scenario.points())}
    with open(out_path, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")
    print(f"wrote {out_path} (total length {doc['total_length_m']:.1f} m)")
    return 0


def cmd_topo(args) -> int:
    from .report import write_csvs_from_doc  # noqa: F401  (shared formatting)
    from .simulator import lmst_series, mtp_series
    from .topology import optimize_series
    import csv

    scenario = load_scenario(args.scenario)
    traj = _plan_or_default(args, scenario)
    pos = positions_over_slots(traj, scenario)
    os.makedirs(args.out, exist_ok=True)
    if args.algo == "ctop":
        series = optimize_series(pos, scenario)
        matrices = series.matrices
        intervals_path = os.path.join(args.out, "intervals.csv")
        with open(intervals_path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["slot", "uav", "p_min_w", "p_max_w"])
            for n in range(series.num_slots + 1):
                for a in range(series.num_uavs):
                    writer.writerow([n, a + 1, repr(float(series.p_min[a, n])),
                                     repr(float(series.p_max[a, n]))])
        print(f"wrote {intervals_path}")
    elif args.algo == "mtp":
        matrices, _ = mtp_series(pos, scenario)
    else:
        matrices, _ = lmst_series(pos, scenario)
    edges_path = os.path.join(args.out, "edges.csv")
    with open(edges_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["slot", "a", "b"])
        for n in range(matrices.shape[0]):
            for a in range(matrices.shape[1]):
                for b in range(a + 1, matrices.shape[1]):
                    if matrices[n, a, b]:
                        writer.writerow([n, a + 1, b + 1])
    print(f"wrote {edges_path}")
    return 0


def cmd_power(args) -> int:
    import csv
    from .power import solve_all
    from .topology import optimize_series

    scenario = load_scenario(args.scenario)
    traj = _plan_or_default(args, scenario)
    pos = positions_over_slots(traj, scenario)
    topo = optimize_series(pos, scenario)
    schedule = solve_all(topo, pos, scenario)
    os.makedirs(args.out, exist_ok=True)
    out_path = os.path.join(args.out, "powers.csv")
    with open(out_path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["slot", "uav", "p_w"])
        for n in range(schedule.p_w.shape[1]):
            for a in range(schedule.p_w.shape[0]):
                writer.writerow([n, a + 1, repr(float(schedule.p_w[a, n]))])
    print(f"wrote {out_path}")
    return 0


def cmd_simulate(args) -> int:
    from .report import emit_report
    from .simulator import run_pipeline

    scenario = load_scenario(args.scenario)
    report = run_pipeline(scenario, planner_choice=args.planner,
                          topo_choice=args.algo, seed=args.seed,
                          model_path=args.model, n_dc=args.n_dc)
    files = emit_report(report, args.out)
    print(f"wrote {', '.join(files)} to {args.out}")
    print(f"throughput_total={report.throughput_total:.6g} "
          f"connectivity_rate={report.connectivity:.4f} "
          f"average_hops={report.avg_hops}")
    return 0


def cmd_train(args) -> int:
    from .planner import (AttentionPlanner, PlannerConfig, TrainConfig,
                          random_instance, save_checkpoint, train,
                          write_training_log)

    torch.manual_seed(args.seed)
    model = AttentionPlanner(PlannerConfig(
        embed_dim=args.embed_dim, n_heads=args.heads, n_layers=args.layers,
        ff_dim=args.ff_dim))

    def gen(rng: np.random.Generator):
        return random_instance(rng, n_waypoints=args.waypoints, n_uavs=args.uavs)

    cfg = TrainConfig(epochs=args.epochs, steps_per_epoch=args.steps,
                      batch_size=args.batch, alpha=args.alpha, lr=args.lr,
                      seed=args.seed, val_size=args.val_size)
    result = train(model, gen, cfg)
    os.makedirs(args.out, exist_ok=True)
    ckpt = os.path.join(args.out, "model.ckpt")
    log = os.path.join(args.out, "training_log.csv")
    save_checkpoint(result.model, ckpt)
    write_training_log(result.history, log)
    print(f"wrote {ckpt} and {log}")
    if result.history:
        last = result.history[-1]
        print(f"final mean length {last.mean_len:.2f}, "
              f"baseline {last.baseline_len:.2f}")
    return 0


def cmd_report(args) -> int:
    from .report import write_csvs_from_doc

    try:
        with open(args.report) as f:
            doc = json.load(f)
    except json.JSONDecodeError as e:
        raise ParseError(f"{args.report}: {e}") from e
    files = write_csvs_from_doc(doc, args.out)
    print(f"wrote {', '.join(files)} to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fanetopt",
        description="Multi-UAV coverage planning with FANET topology and "
                    "transmit-power optimization")
    subs = parser.add_subparsers(dest="command", required=True)

    gen = subs.add_parser("gen", help="expand a terrain block into waypoints")
    _common_flags(gen)
    gen.set_defaults(func=cmd_gen)

    plan = subs.add_parser("plan", help="plan coverage routes")
    _common_flags(plan)
    plan.add_argument("--planner", choices=["trained", "heuristic", "oracle"],
                      default="heuristic")
    plan.add_argument("--model", help="checkpoint for --planner trained")
    plan.set_defaults(func=cmd_plan)

    topo = subs.add_parser("topo", help="per-slot topology for a plan")
    _common_flags(topo)
    topo.add_argument("--algo", choices=["ctop", "mtp", "lmst"], default="ctop")
    topo.add_argument("--plan", help="plan.json from the plan subcommand")
    topo.set_defaults(func=cmd_topo)

    power = subs.add_parser("power", help="throughput-optimal transmit powers")
    _common_flags(power)
    power.add_argument("--plan", help="plan.json from the plan subcommand")
    power.set_defaults(func=cmd_power)

    simulate = subs.add_parser("simulate", help="full pipeline plus metrics")
    _common_flags(simulate)
    simulate.add_argument("--planner", choices=["trained", "heuristic", "oracle"],
                          default="heuristic")
    simulate.add_argument("--model", help="checkpoint for --planner trained")
    simulate.add_argument("--algo", choices=["ctop", "mtp", "lmst"], default="ctop")
    simulate.add_argument("--n-dc", type=int, default=None,
                          help="failure-injection slot for the connectivity rate")
    simulate.set_defaults(func=cmd_simulate)

    train_p = subs.add_parser("train", help="train the route-planning policy")
    _common_flags(train_p, scenario=False)
    train_p.add_argument("--waypoints", type=int, default=5)
    train_p.add_argument("--uavs", type=int, default=1)
    train_p.add_argument("--epochs", type=int, default=10)
    train_p.add_argument("--steps", type=int, default=10)
    train_p.add_argument("--batch", type=int, default=32)
    train_p.add_argument("--alpha", type=float, default=0.05)
    train_p.add_argument("--lr", type=float, default=3e-4)
    train_p.add_argument("--val-size", type=int, default=20)
    train_p.add_argument("--embed-dim", type=int, default=64)
    train_p.add_argument("--heads", type=int, default=4)
    train_p.add_argument("--layers", type=int, default=2)
    train_p.add_argument("--ff-dim", type=int, default=128)
    train_p.set_defaults(func=cmd_train)

    report = subs.add_parser("report", help="re-render CSVs from report.json")
    report.add_argument("--report", required=True, help="report.json path")
    report.add_argument("--out", default=".")
    report.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, ValidationError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except _INFEASIBLE as e:
        print(f"infeasible: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
