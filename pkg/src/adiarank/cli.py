"""Command-line interface.

Subcommands:
    gen         write random instance files
    solve-exact certified ground state of one instance file
    anneal      single run with one engine (tebd, langevin, llg, gd, metropolis)
    classify    chi* classification of one instance
    hull        full (chi, T) success grid of one instance
    run         cohort grid across a worker pool
    report      histogram/hull CSVs from a results directory
"""

import argparse
import csv
import sys
from pathlib import Path

from . import harness
from .instances import CHAIN, LADDER16, parse, serialize
from .langevin import LangevinMpsParams, langevin_anneal
from .oracle import solve
from .schedule import default_schedule, parse_schedule
from .spins import (
    DynamicsParams,
    gradient_descent_anneal,
    llg_anneal,
    metropolis_anneal,
)
from .tebd import (
    DEFAULT_DT,
    classify_chi_star,
    success_hull,
    tebd_anneal,
)


def _load_instance(path: str):
    return parse(Path(path).read_text())


def _load_schedule(args, sweep_time):
    if getattr(args, "schedule", None):
        return parse_schedule(Path(args.schedule).read_text())
    return default_schedule(sweep_time)


def _ints(text: str):
    return tuple(int(x) for x in text.split(",") if x)


def _cmd_gen(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cohort = harness.generate_cohort(args.topology, args.n, args.count, args.seed)
    for instance_id, instance, _ in cohort.entries:
        (out / f"{instance_id}.ising").write_text(serialize(instance))
        print(instance_id)
    return 0


def _cmd_solve_exact(args):
    truth = solve(_load_instance(args.instance))
    print(f"energy {truth.energy!r}")
    print(f"degeneracy {truth.degeneracy}")
    for config in truth.configs:
        print(config.to_string())
    return 0


def _dump_trajectory(path, trajectory):
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["t", "site", "nx", "ny", "nz"])
        for t, vectors in trajectory:
            for site, (nx, ny, nz) in enumerate(vectors):
                writer.writerow(
                    [repr(float(t)), site, repr(float(nx)), repr(float(ny)), repr(float(nz))]
                )


def _cmd_anneal(args):
    instance = _load_instance(args.instance)
    schedule = _load_schedule(args, args.time)
    record_every = max(1, args.traj_every) if args.traj else 0
    if args.engine == "tebd":
        _, record = tebd_anneal(instance, schedule, args.chi, args.dt,
                                instance_id=args.instance)
        _print_record(record)
    elif args.engine == "langevin":
        params = LangevinMpsParams(gamma=args.gamma, temperature=args.temp,
                                   dt=args.dt, seed=args.seed)
        record = langevin_anneal(instance, schedule, args.chi, params,
                                 instance_id=args.instance)
        _print_record(record)
    elif args.engine in ("llg", "gd", "metropolis"):
        if args.engine == "llg":
            params = DynamicsParams(gamma=args.gamma, temperature=args.temp,
                                    dt=args.dt, seed=args.seed)
            config, trajectory = llg_anneal(instance, schedule, params,
                                            record_every=record_every)
        elif args.engine == "gd":
            steps = max(1, round(schedule.total_time / args.dt))
            config, trajectory = gradient_descent_anneal(
                instance, schedule, steps, gamma=args.gamma,
                record_every=record_every)
        else:
            params = DynamicsParams(gamma=args.gamma, temperature=args.temp,
                                    dt=args.dt, seed=args.seed)
            config = metropolis_anneal(instance, schedule, args.sweeps, params)
            trajectory = []
        truth = solve(instance)
        from .instances import classical_energy

        energy = classical_energy(instance, config)
        print(f"readout {config.to_string()}")
        print(f"energy {energy!r}")
        print(f"ground_energy {truth.energy!r}")
        print(f"success {int(truth.contains(config))}")
        if args.traj and trajectory:
            _dump_trajectory(args.traj, trajectory)
    else:
        raise SystemExit(f"unknown engine {args.engine}")
    return 0


def _print_record(record):
    print(f"readout {record.readout.to_string()}")
    print(f"final_energy {record.final_energy!r}")
    print(f"ground_energy {record.ground_energy!r}")
    print(f"residual {record.residual!r}")
    print(f"discarded_weight {record.max_discarded_weight!r}")
    print(f"success {int(record.success)}")
    return 0


def _cmd_classify(args):
    instance = _load_instance(args.instance)
    time_list = None
    if args.times:
        time_list = tuple(float(x) for x in args.times.split(","))
    classification = classify_chi_star(
        instance, chi_list=_ints(args.chi_list), time_list=time_list,
        dt=args.dt, t0=args.t0, instance_id=args.instance,
    )
    chi_star = classification.chi_star
    print(f"chi_star {'unclassified' if chi_star is None else chi_star}")
    for chi, t_star in sorted(classification.t_star.items()):
        print(f"t_star chi={chi} {'none' if t_star is None else repr(t_star)}")
    return 0


def _cmd_hull(args):
    instance = _load_instance(args.instance)
    t0 = args.t0 if args.t0 else 10.0 * instance.n_sites
    times = tuple(float(x) * t0 for x in args.time_grid.split(","))
    table = success_hull(instance, _ints(args.chi_grid), times, dt=args.dt,
                         instance_id=args.instance)
    rows = ["instance_id,chi,sweep_time,success,residual,discarded_weight"]
    for r in table.records:
        rows.append(f"{r.instance_id},{r.chi},{r.sweep_time!r},{int(r.success)},"
                    f"{r.residual!r},{r.max_discarded_weight!r}")
    text = "\n".join(rows) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    for chi, t in sorted(table.boundary.items()):
        print(f"# boundary chi={chi} t={'none' if t is None else repr(t)}")
    if table.no_hull:
        print("# no hull within grid")
    for chi, t_ok, t_bad in table.violations:
        print(f"# monotonicity violation chi={chi} success@{t_ok!r} failure@{t_bad!r}")
    return 0


def _parse_grid(grid_args):
    chi_list, multipliers = None, None
    for item in grid_args or []:
        key, _, value = item.partition("=")
        if key == "chi":
            chi_list = tuple(int(x) for x in value.split(","))
        elif key == "time":
            multipliers = tuple(
                int(x.replace("T0", "")) if x != "T0" else 1
                for x in value.split(",")
            )
        else:
            raise SystemExit(f"unknown grid axis {key!r}")
    return chi_list, multipliers


def _cmd_run(args):
    chi_list, multipliers = _parse_grid(args.grid)
    out = harness.run_cohort(
        args.out,
        topology=args.topology,
        n=args.n,
        count=args.count,
        seed=args.seed,
        chi_list=chi_list or (1, 2, 3, 4),
        time_multipliers=multipliers or (1, 2, 4, 8),
        t0=args.t0,
        dt=args.dt,
        engine=args.engine,
        workers=args.workers,
        gamma=args.gamma,
        temperature=args.temp,
        seeds_per_cell=args.seeds_per_cell,
    )
    print(f"results written to {out}")
    return 0


def _cmd_report(args):
    report = harness.make_report(args.results_dir, reference_chi=args.reference_chi)
    print(f"cohort_size {report.cohort_size}")
    for key in sorted(report.chi_star_hist):
        print(f"chi_star {key}: {report.chi_star_hist[key]}")
    print(f"unclassified {report.unclassified}")
    for key in sorted(report.sweep_time_hist, key=lambda s: (s == 'none', s)):
        print(f"t_star[chi={report.reference_chi}] {key}: {report.sweep_time_hist[key]}")
    for key in sorted(report.cohort_success):
        print(f"mean_success chi_star={key}: {report.cohort_success[key]:.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adiarank",
        description="Bounded-Schmidt-rank simulation of adiabatic Ising optimisation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate random instance files")
    p.add_argument("--topology", choices=[CHAIN, LADDER16], default=CHAIN)
    p.add_argument("--n", type=int, default=30, help="chain length (ladder16 is fixed)")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".")
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("solve-exact", help="certified ground state of an instance")
    p.add_argument("instance")
    p.set_defaults(func=_cmd_solve_exact)

    p = sub.add_parser("anneal", help="single annealing run")
    p.add_argument("--engine", choices=["tebd", "langevin", "llg", "gd", "metropolis"],
                   default="tebd")
    p.add_argument("--instance", required=True)
    p.add_argument("--chi", type=int, default=2)
    p.add_argument("--time", type=float, default=None,
                   help="sweep time (default 10*N)")
    p.add_argument("--dt", type=float, default=DEFAULT_DT)
    p.add_argument("--gamma", type=float, default=0.1)
    p.add_argument("--temp", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sweeps", type=int, default=1000, help="metropolis sweeps")
    p.add_argument("--schedule", help="knot table file: lines 't A B'")
    p.add_argument("--traj", help="CSV trajectory dump (spin engines)")
    p.add_argument("--traj-every", type=int, default=10)
    p.set_defaults(func=_cmd_anneal)

    p = sub.add_parser("classify", help="chi* classification of one instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--chi-list", default="1,2,3,4")
    p.add_argument("--times", default=None, help="absolute sweep times, comma separated")
    p.add_argument("--t0", type=float, default=None)
    p.add_argument("--dt", type=float, default=DEFAULT_DT)
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("hull", help="full success grid of one instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--chi-grid", default="1,2,3,4")
    p.add_argument("--time-grid", default="1,2,4,8", help="multiples of T0")
    p.add_argument("--t0", type=float, default=None)
    p.add_argument("--dt", type=float, default=DEFAULT_DT)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_hull)

    p = sub.add_parser("run", help="cohort grid across a worker pool")
    p.add_argument("--topology", choices=[CHAIN, LADDER16], default=CHAIN)
    p.add_argument("--n", type=int, default=30)
    p.add_argument("--count", type=int, default=50)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--grid", nargs="*", help="chi=1,2,3,4 time=T0,2T0,4T0,8T0")
    p.add_argument("--t0", type=float, default=None)
    p.add_argument("--dt", type=float, default=DEFAULT_DT)
    p.add_argument("--engine", choices=["tebd", "langevin"], default="tebd")
    p.add_argument("--workers", type=int, default=None,
                   help=f"worker count (or set {harness.WORKERS_ENV})")
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--temp", type=float, default=0.0)
    p.add_argument("--seeds-per-cell", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("report", help="histograms from a results directory")
    p.add_argument("results_dir")
    p.add_argument("--reference-chi", type=int, default=2)
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "time", "missing") is None and hasattr(args, "instance"):
        instance = _load_instance(args.instance)
        args.time = 10.0 * instance.n_sites
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
