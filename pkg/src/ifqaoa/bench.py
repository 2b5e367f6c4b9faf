"""Benchmark sweeps: instances x methods x register sizes, with resumable record files."""

from __future__ import annotations

import csv
import json
import logging
import math
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .diagonals import Method, build_tables
from .engine import QaoaParams
from .instances import KnapsackInstance, dumps_instance, parse_instance, to_problem
from .metrics import RunRecord, tts_star
from .optimize import DEFAULT_DEPTHS, DepthSchedule, optimize_linear_then_finetune, optimize_sequential

__all__ = [
    "BenchConfig",
    "Job",
    "run_job",
    "RecordStore",
    "plan_jobs",
    "run_bench",
    "summarize",
    "write_reports",
    "read_records",
]

log = logging.getLogger(__name__)

SUMMARY_FIELDS = ("raar", "p_star", "tts", "q_total", "feasibility", "objective")


@dataclass
class BenchConfig:
    dataset: str | None = None
    methods: tuple = ("if-exact", "virtual-penalty")
    depths: tuple = DEFAULT_DEPTHS
    qpe_bits: tuple = ()
    epsilon: float = 0.5
    seed: int = 0
    out: str = "results"
    workers: int = 1
    max_iters: int = 100
    limit: int | None = None

    def __post_init__(self):
        self.methods = tuple(Method(m).value for m in self.methods)
        self.depths = tuple(int(p) for p in self.depths)
        self.qpe_bits = tuple(int(m) for m in self.qpe_bits)
        if not self.methods:
            raise ValueError("at least one method is required")
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError("epsilon must lie in [0, 1)")
        has_approx = Method.IF_APPROX.value in self.methods
        if has_approx and not self.qpe_bits:
            raise ValueError("if-approx needs qpe_bits")
        if self.qpe_bits and not has_approx:
            raise ValueError("qpe_bits given but if-approx not selected")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass
class Job:
    instance: str              # serialized dataset line
    method: str
    qpe_bits: int | None
    depths: tuple
    epsilon: float
    max_iters: int
    start: dict | None = None  # last finished record when resuming
    protocol: str = "sequential"


def run_job(job: Job) -> list[dict]:
    """Run one (instance, method, register size) ladder; returns serialized records."""
    inst = parse_instance(job.instance)
    tables = build_tables(to_problem(inst), job.method, epsilon=job.epsilon, qpe_bits=job.qpe_bits)
    if job.protocol == "qtg":
        p = job.depths[-1]
        linear, fine = optimize_linear_then_finetune(tables, p, job.max_iters, instance_id=inst.id)
        return [linear.to_dict(), fine.to_dict()]
    start = None
    if job.start is not None:
        start = QaoaParams(job.start["betas"], job.start["gammas"])
    schedule = DepthSchedule(depths=job.depths, max_iters=job.max_iters)
    records = optimize_sequential(tables, schedule, instance_id=inst.id, start_params=start)
    return [r.to_dict() for r in records]


def read_records(path) -> list[RunRecord]:
    path = Path(path)
    if not path.exists():
        return []
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(RunRecord.from_dict(json.loads(line)))
    return out


class RecordStore:
    """Append-only JSON-lines record file; the only writer of a results directory."""

    def __init__(self, path):
        self.path = Path(path)
        self.records = read_records(self.path)
        self.keys = {r.key for r in self.records}

    def append(self, rec: dict) -> None:
        record = RunRecord.from_dict(rec)
        if record.key in self.keys:
            return
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(rec, separators=(",", ":")) + "\n")
        self.records.append(record)
        self.keys.add(record.key)

    def ladder(self, instance_id: str, method: str, qpe_bits) -> list[RunRecord]:
        out = [
            r for r in self.records
            if r.instance_id == instance_id and r.method == method
            and r.qpe_bits == qpe_bits and r.stage == "sequential"
        ]
        return sorted(out, key=lambda r: r.p)


def plan_jobs(instances, cfg: BenchConfig, store: RecordStore | None = None) -> list[Job]:
    jobs = []
    for inst in instances:
        line = dumps_instance(inst)
        for method in cfg.methods:
            bits = cfg.qpe_bits if method == Method.IF_APPROX.value else (None,)
            for m in bits:
                depths = cfg.depths
                start = None
                if store is not None:
                    done = store.ladder(inst.id, method, m)
                    if any(r.status != "ok" for r in done):
                        continue
                    finished = {r.p for r in done}
                    depths = tuple(p for p in cfg.depths if p not in finished)
                    if not depths:
                        continue
                    prior = [r for r in done if r.p < depths[0]]
                    if prior:
                        start = prior[-1].to_dict()
                jobs.append(Job(line, method, m, depths, cfg.epsilon, cfg.max_iters, start))
    return jobs


def run_bench(cfg: BenchConfig, instances: list[KnapsackInstance]) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.limit is not None:
        instances = instances[: cfg.limit]
    store = RecordStore(out / "records.jsonl")
    jobs = plan_jobs(instances, cfg, store)
    log.info("%d jobs planned (%d records already present)", len(jobs), len(store.records))
    errors_path = out / "errors.jsonl"

    def fail(job, exc):
        inst = parse_instance(job.instance)
        entry = {"instance_id": inst.id, "method": job.method, "qpe_bits": job.qpe_bits, "error": repr(exc)}
        log.warning("job failed: %s", entry)
        with open(errors_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry) + "\n")

    if cfg.workers == 1:
        for job in jobs:
            try:
                for rec in run_job(job):
                    store.append(rec)
            except Exception as exc:  # recorded per job, sweep continues
                fail(job, exc)
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futures = {pool.submit(run_job, job): job for job in jobs}
            for fut in as_completed(futures):
                try:
                    for rec in fut.result():
                        store.append(rec)
                except Exception as exc:
                    fail(futures[fut], exc)
    write_reports(store.records, out, instances)
    return out


# -- aggregation -----------------------------------------------------------------------------


def _quantiles(values):
    arr = np.asarray(values, dtype=float)
    arr = arr[~np.isnan(arr)]
    if arr.size == 0:
        return math.nan, math.nan, math.nan
    q25, med, q75 = np.percentile(arr, [25, 50, 75])
    return float(q25), float(med), float(q75)


def summarize(records) -> list[dict]:
    """Median and inter-quartile range per (method, qpe_bits, n, p, stage)."""
    groups = defaultdict(list)
    for r in records:
        if r.status == "ok":
            groups[(r.method, r.qpe_bits, r.n, r.p, r.stage)].append(r)
    rows = []
    for (method, bits, n, p, stage), recs in sorted(groups.items(), key=lambda kv: tuple(
            (-1 if x is None else x) for x in kv[0][:4]) + (kv[0][4],)):
        row = {"method": method, "qpe_bits": bits, "n": n, "p": p, "stage": stage, "count": len(recs)}
        for name in SUMMARY_FIELDS:
            q25, med, q75 = _quantiles([getattr(r, name) for r in recs])
            row[f"{name}_median"] = med
            row[f"{name}_q25"] = q25
            row[f"{name}_q75"] = q75
        rows.append(row)
    return rows


def _write_csv(path, rows, fields=None):
    rows = list(rows)
    if fields is None:
        fields = list(rows[0]) if rows else []
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("" if row.get(k) is None else row.get(k)) for k in fields})


def tts_star_table(records, instances=None) -> list[dict]:
    ratios = {inst.id: inst.weight_ratio for inst in instances or ()}
    ladders = defaultdict(list)
    for r in records:
        if r.stage == "sequential":
            ladders[(r.instance_id, r.method, r.qpe_bits, r.n)].append(r)
    rows = []
    for (iid, method, bits, n), recs in sorted(ladders.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2] or -1)):
        best_p, best = tts_star(recs)
        rows.append({
            "instance_id": iid, "method": method, "qpe_bits": bits, "n": n,
            "best_p": best_p, "tts_star": best, "weight_ratio": ratios.get(iid),
        })
    return rows


def write_reports(records, out, instances=None) -> None:
    """Write summary.csv, records.csv and the plot-data tables."""
    out = Path(out)
    records = list(records)
    summary = summarize(records)
    _write_csv(out / "summary.csv", summary)
    flat = []
    for r in records:
        d = r.to_dict()
        for key in ("betas", "gammas", "q_list", "trace"):
            d[key] = json.dumps(d[key])
        flat.append(d)
    _write_csv(out / "records.csv", flat, list(RunRecord.__dataclass_fields__))

    seq = [row for row in summary if row["stage"] == "sequential"]
    base = ["method", "qpe_bits", "n", "p", "count"]
    for name, metric in (("raar_vs_p", "raar"), ("tts_vs_p", "tts"), ("qtotal_vs_p", "q_total")):
        fields = base + [f"{metric}_median", f"{metric}_q25", f"{metric}_q75"]
        _write_csv(out / f"{name}.csv", seq, fields)

    per_instance = tts_star_table(records, instances)
    _write_csv(out / "tts_star_per_instance.csv", per_instance,
               ["instance_id", "method", "qpe_bits", "n", "best_p", "tts_star", "weight_ratio"])
    groups = defaultdict(list)
    for row in per_instance:
        groups[(row["method"], row["qpe_bits"], row["n"])].append(row["tts_star"])
    rows = []
    for (method, bits, n), vals in sorted(groups.items(), key=lambda kv: (kv[0][0], kv[0][1] or -1, kv[0][2])):
        q25, med, q75 = _quantiles([v if math.isfinite(v) else math.nan for v in vals])
        rows.append({"method": method, "qpe_bits": bits, "n": n, "count": len(vals),
                     "tts_star_median": med, "tts_star_q25": q25, "tts_star_q75": q75})
    _write_csv(out / "tts_star_vs_n.csv", rows,
               ["method", "qpe_bits", "n", "count", "tts_star_median", "tts_star_q25", "tts_star_q75"])
