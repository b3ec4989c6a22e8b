"""Cohort orchestration: generate, classify across a worker pool, report.

A results directory contains

    manifest.json          cohort metadata (topology, size, seeds, grid, dt)
    instances/<id>.ising   one instance file per cohort member
    oracles.json           exact ground energy / degeneracy / configs (<= 64)
    runs.csv               one line per RunRecord
    classifications.csv    chi* and per-rank minimal successful times

Runs are resumable: completed (instance, engine, chi, time, seed) keys found
in runs.csv are never recomputed.  Worker scheduling cannot change any output:
each instance is classified independently and all files are rewritten in
sorted order on completion.
"""

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .instances import (
    CHAIN,
    LADDER16,
    IsingInstance,
    SpinConfig,
    generate_ladder16,
    generate_random_chain,
    parse,
    serialize,
)
from .langevin import LangevinMpsParams, langevin_anneal
from .oracle import GroundTruth, solve
from .schedule import default_schedule
from .tebd import (
    DEFAULT_CHI_LIST,
    DEFAULT_DT,
    DEFAULT_TIME_MULTIPLIERS,
    Classification,
    RunRecord,
    classify_chi_star,
)

WORKERS_ENV = "ADIARANK_WORKERS"

RUN_FIELDS = [
    "instance_id",
    "engine",
    "chi",
    "sweep_time",
    "dt",
    "seed",
    "success",
    "final_energy",
    "ground_energy",
    "residual",
    "discarded_weight",
    "readout",
]


@dataclass
class Cohort:
    """Instances plus their certified ground truths."""

    topology: str
    size: int
    seed: int
    entries: list[tuple[str, IsingInstance, GroundTruth]] = field(default_factory=list)

    def ids(self) -> list[str]:
        return [entry[0] for entry in self.entries]


@dataclass
class Report:
    """Histogram data mirroring the per-cohort figures."""

    cohort_size: int
    chi_star_hist: dict[str, int]
    sweep_time_hist: dict[str, int]
    unclassified: int
    per_instance: list[dict]
    cohort_success: dict[str, float]
    reference_chi: int = 2


def instance_seed(cohort_seed: int, index: int) -> int:
    """Deterministic per-instance seed (independent of worker scheduling)."""
    child = np.random.SeedSequence(cohort_seed, spawn_key=(index,))
    return int(child.generate_state(1, np.uint64)[0])


def run_seed(cohort_seed: int, instance_id: str, chi: int, sweep_time: float, rep: int) -> int:
    """Deterministic per-run seed for stochastic engines."""
    key = f"{cohort_seed}:{instance_id}:{chi}:{sweep_time!r}:{rep}"
    child = np.random.SeedSequence([cohort_seed, abs(hash(key)) % (2**63)])
    return int(child.generate_state(1, np.uint64)[0])


def generate_cohort(topology: str, n: int, count: int, seed: int) -> Cohort:
    """Random cohort with exact oracle results attached."""
    cohort = Cohort(topology=topology, size=count, seed=seed)
    width = max(3, len(str(count - 1)))
    for k in range(count):
        inst_seed = instance_seed(seed, k)
        if topology == CHAIN:
            inst = generate_random_chain(n, inst_seed)
        elif topology == LADDER16:
            inst = generate_ladder16(inst_seed)
        else:
            raise ValueError(f"unknown topology {topology!r}")
        instance_id = f"{topology}{inst.n_sites}-s{seed}-i{k:0{width}d}"
        cohort.entries.append((instance_id, inst, solve(inst)))
    return cohort


def record_to_row(record: RunRecord) -> dict:
    return {
        "instance_id": record.instance_id,
        "engine": record.engine,
        "chi": record.chi,
        "sweep_time": repr(record.sweep_time),
        "dt": repr(record.dt),
        "seed": "" if record.seed is None else record.seed,
        "success": int(record.success),
        "final_energy": repr(record.final_energy),
        "ground_energy": repr(record.ground_energy),
        "residual": repr(record.residual),
        "discarded_weight": repr(record.max_discarded_weight),
        "readout": record.readout.to_string(),
    }


def row_to_record(row: dict) -> RunRecord:
    return RunRecord(
        instance_id=row["instance_id"],
        chi=int(row["chi"]),
        sweep_time=float(row["sweep_time"]),
        dt=float(row["dt"]),
        success=bool(int(row["success"])),
        final_energy=float(row["final_energy"]),
        ground_energy=float(row["ground_energy"]),
        residual=float(row["residual"]),
        max_discarded_weight=float(row["discarded_weight"]),
        readout=SpinConfig.from_string(row["readout"]),
        engine=row["engine"],
        seed=int(row["seed"]) if row.get("seed") else None,
    )


def _record_key(record: RunRecord):
    return (
        record.instance_id,
        record.engine,
        record.chi,
        round(record.sweep_time, 9),
        -1 if record.seed is None else record.seed,
    )


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    try:
        tmp.write_text(text)
        os.replace(tmp, path)
    except OSError as err:
        raise OSError(f"failed writing {path}: {err}") from err


def _write_runs_csv(path: Path, records: list[RunRecord]) -> None:
    rows = sorted(records, key=_record_key)
    out = [",".join(RUN_FIELDS)]
    for record in rows:
        row = record_to_row(record)
        out.append(",".join(str(row[f]) for f in RUN_FIELDS))
    _atomic_write(path, "\n".join(out) + "\n")


def _read_runs_csv(path: Path) -> list[RunRecord]:
    if not path.exists():
        return []
    with open(path, newline="") as handle:
        return [row_to_record(row) for row in csv.DictReader(handle)]


def _classify_worker(args):
    (instance_text, instance_id, chi_list, time_list, dt, known_rows) = args
    instance = parse(instance_text)
    ground_truth = solve(instance)
    known = {}
    for row in known_rows:
        record = row_to_record(row)
        known[(record.chi, round(record.sweep_time, 9))] = record
    return classify_chi_star(
        instance,
        chi_list=chi_list,
        time_list=time_list,
        dt=dt,
        ground_truth=ground_truth,
        instance_id=instance_id,
        known_records=known,
    )


def _langevin_worker(args):
    (instance_text, instance_id, chi, sweep_time, dt, gamma, temperature, seed) = args
    instance = parse(instance_text)
    params = LangevinMpsParams(gamma=gamma, temperature=temperature, dt=dt, seed=seed)
    return langevin_anneal(
        instance, default_schedule(sweep_time), chi, params,
        ground_truth=solve(instance), instance_id=instance_id,
    )


def resolve_workers(requested: int | None) -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    if requested is None:
        return 1
    return max(1, requested)


def run_cohort(
    out_dir,
    topology: str = CHAIN,
    n: int = 30,
    count: int = 50,
    seed: int = 7,
    chi_list=DEFAULT_CHI_LIST,
    time_multipliers=DEFAULT_TIME_MULTIPLIERS,
    t0: float | None = None,
    dt: float = DEFAULT_DT,
    engine: str = "tebd",
    workers: int | None = None,
    gamma: float = 0.0,
    temperature: float = 0.0,
    seeds_per_cell: int = 1,
    cohort: Cohort | None = None,
) -> Path:
    """Generate (or accept) a cohort, run the grid, persist everything.

    Returns the results directory.  Already-completed runs found in
    ``runs.csv`` are reused, so interrupted cohorts resume cheaply and
    re-running a finished cohort recomputes nothing.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "instances").mkdir(exist_ok=True)
    if cohort is None:
        cohort = generate_cohort(topology, n, count, seed)
    manifest = {
        "topology": cohort.topology,
        "n": cohort.entries[0][1].n_sites if cohort.entries else n,
        "count": cohort.size,
        "seed": cohort.seed,
        "engine": engine,
        "chi_list": list(chi_list),
        "time_multipliers": list(time_multipliers),
        "t0": t0,
        "dt": dt,
        "gamma": gamma,
        "temperature": temperature,
        "seeds_per_cell": seeds_per_cell,
    }
    _atomic_write(out / "manifest.json", json.dumps(manifest, indent=2) + "\n")
    oracles = {}
    for instance_id, instance, truth in cohort.entries:
        _atomic_write(out / "instances" / f"{instance_id}.ising", serialize(instance))
        oracles[instance_id] = {
            "energy": truth.energy,
            "degeneracy": truth.degeneracy,
            "configs": [c.to_string() for c in truth.configs],
        }
    _atomic_write(out / "oracles.json", json.dumps(oracles, indent=2) + "\n")

    runs_path = out / "runs.csv"
    existing = _read_runs_csv(runs_path)
    done = {_record_key(r): r for r in existing}
    workers = resolve_workers(workers)

    all_records: list[RunRecord] = list(existing)
    classifications: list[Classification] = []
    if engine == "tebd":
        tasks = []
        for instance_id, instance, _ in cohort.entries:
            time_list = tuple(
                m * (t0 if t0 is not None else 10.0 * instance.n_sites)
                for m in time_multipliers
            )
            known = [
                record_to_row(r)
                for r in existing
                if r.instance_id == instance_id and r.engine == "tebd"
            ]
            tasks.append(
                (serialize(instance), instance_id, tuple(chi_list), time_list, dt, known)
            )
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_classify_worker, tasks))
        else:
            results = [_classify_worker(t) for t in tasks]
        for classification in sorted(results, key=lambda c: c.instance_id):
            classifications.append(classification)
            for record in classification.records:
                key = _record_key(record)
                if key not in done:
                    done[key] = record
                    all_records.append(record)
    elif engine == "langevin":
        tasks = []
        for instance_id, instance, _ in cohort.entries:
            base_t0 = t0 if t0 is not None else 10.0 * instance.n_sites
            for chi in chi_list:
                for m in time_multipliers:
                    sweep_time = m * base_t0
                    for rep in range(seeds_per_cell):
                        rseed = run_seed(cohort.seed, instance_id, chi, sweep_time, rep)
                        key = (instance_id, "langevin", chi, round(sweep_time, 9), rseed)
                        if key in done:
                            continue
                        tasks.append(
                            (
                                serialize(instance), instance_id, chi, sweep_time,
                                dt, gamma, temperature, rseed,
                            )
                        )
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                new_records = list(pool.map(_langevin_worker, tasks))
        else:
            new_records = [_langevin_worker(t) for t in tasks]
        for record in new_records:
            done[_record_key(record)] = record
            all_records.append(record)
    else:
        raise ValueError(f"unknown engine {engine!r} (expected tebd or langevin)")

    _write_runs_csv(runs_path, all_records)
    if engine == "tebd":
        _write_classifications(out / "classifications.csv", classifications, chi_list)
    return out


def _write_classifications(path: Path, classifications, chi_list) -> None:
    header = ["instance_id", "chi_star"] + [f"t_star_chi{c}" for c in chi_list]
    lines = [",".join(header)]
    for cls in sorted(classifications, key=lambda c: c.instance_id):
        row = [
            cls.instance_id,
            "unclassified" if cls.chi_star is None else str(cls.chi_star),
        ]
        for chi in chi_list:
            t = cls.t_star.get(chi)
            row.append("" if t is None else repr(t))
        lines.append(",".join(row))
    _atomic_write(path, "\n".join(lines) + "\n")


def _read_classifications(path: Path) -> list[dict]:
    if not path.exists():
        return []
    with open(path, newline="") as handle:
        return list(csv.DictReader(handle))


def make_report(results_dir, reference_chi: int = 2) -> Report:
    """Histograms and per-instance summary from a (possibly partial) results dir.

    ``sweep_time_hist`` bins instances by the minimal successful time at
    ``reference_chi``.  Stochastic-engine success frequencies are joined per
    instance into ``cohort_success`` (mean success probability per chi* bin).
    """
    out = Path(results_dir)
    if not out.exists() or not (out / "manifest.json").exists():
        raise FileNotFoundError(f"no results manifest under {out}")
    manifest = json.loads((out / "manifest.json").read_text())
    records = _read_runs_csv(out / "runs.csv")
    if not records and not _read_classifications(out / "classifications.csv"):
        raise FileNotFoundError(f"no runs or classifications in {out}")
    rows = _read_classifications(out / "classifications.csv")

    chi_hist: dict[str, int] = {}
    time_hist: dict[str, int] = {}
    per_instance = []
    unclassified = 0
    for row in rows:
        chi_star = row["chi_star"]
        if chi_star == "unclassified":
            unclassified += 1
        else:
            chi_hist[chi_star] = chi_hist.get(chi_star, 0) + 1
        t_ref = row.get(f"t_star_chi{reference_chi}", "")
        t_key = t_ref if t_ref else "none"
        time_hist[t_key] = time_hist.get(t_key, 0) + 1
        per_instance.append(dict(row))

    # stochastic success probabilities joined per instance
    prob: dict[str, list[int]] = {}
    for record in records:
        if record.engine == "tebd":
            continue
        prob.setdefault(record.instance_id, []).append(int(record.success))
    success_prob = {k: float(np.mean(v)) for k, v in prob.items()}
    for row in per_instance:
        if row["instance_id"] in success_prob:
            row["success_probability"] = success_prob[row["instance_id"]]
    cohort_success: dict[str, list] = {}
    for row in per_instance:
        p = row.get("success_probability")
        if p is not None:
            cohort_success.setdefault(row["chi_star"], []).append(p)
    cohort_success = {k: float(np.mean(v)) for k, v in cohort_success.items()}

    report = Report(
        cohort_size=int(manifest["count"]),
        chi_star_hist=chi_hist,
        sweep_time_hist=time_hist,
        unclassified=unclassified,
        per_instance=per_instance,
        cohort_success=cohort_success,
        reference_chi=reference_chi,
    )
    _write_report_csvs(out, report, records)
    return report


def _write_report_csvs(out: Path, report: Report, records) -> None:
    lines = ["chi_star,count"]
    for key in sorted(report.chi_star_hist):
        lines.append(f"{key},{report.chi_star_hist[key]}")
    if report.unclassified:
        lines.append(f"unclassified,{report.unclassified}")
    _atomic_write(out / "chi_star_hist.csv", "\n".join(lines) + "\n")

    lines = [f"t_star_chi{report.reference_chi},count"]
    for key in sorted(report.sweep_time_hist, key=lambda s: (s == "none", s)):
        lines.append(f"{key},{report.sweep_time_hist[key]}")
    _atomic_write(out / "sweep_time_hist.csv", "\n".join(lines) + "\n")

    by_instance: dict[str, list] = {}
    for record in records:
        by_instance.setdefault(record.instance_id, []).append(record)
    for instance_id, rows in sorted(by_instance.items()):
        lines = ["instance_id,chi,sweep_time,success,residual,discarded_weight"]
        for r in sorted(rows, key=_record_key):
            lines.append(
                f"{r.instance_id},{r.chi},{r.sweep_time!r},{int(r.success)},"
                f"{r.residual!r},{r.max_discarded_weight!r}"
            )
        _atomic_write(out / f"hull_{instance_id}.csv", "\n".join(lines) + "\n")
