"""Command-line front end: ``ifqaoa gen|run|bench|theta|report``.

Exit codes: 0 success, 2 usage, 3 invalid data, 4 vanishing post-selection, 5 I/O.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bench import BenchConfig, Job, read_records, run_bench, run_job, write_reports
from .diagonals import Method
from .engine import VanishingSuccessError
from .instances import DatasetError, dumps_instance, generate_real, load_dataset, save_dataset, to_integer
from .metrics import qtg_matched_depth
from .optimize import DEFAULT_DEPTHS

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_ABORT = 4
EXIT_IO = 5

log = logging.getLogger("ifqaoa")


class UsageError(Exception):
    pass


def int_list(text: str) -> list[int]:
    """Parse ``"1,2,4"`` or a range ``"6:22:2"`` (inclusive stop)."""
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if ":" in part:
            bits = [int(b) for b in part.split(":")]
            start, stop = bits[0], bits[1]
            step = bits[2] if len(bits) > 2 else 1
            out.extend(range(start, stop + 1, step))
        else:
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError(f"empty list: {text!r}")
    return out


def _methods(values) -> list[str]:
    out = []
    for v in values:
        for name in str(v).split(","):
            if name.strip():
                try:
                    out.append(Method(name.strip()).value)
                except ValueError:
                    choices = ", ".join(m.value for m in Method)
                    raise UsageError(f"unknown method {name!r} (choose from {choices})") from None
    return out


def derive_seed(seed: int, n: int, index: int) -> int:
    """Per-instance seed, stable under changes to the size list or count."""
    return int(np.random.SeedSequence([seed, n, index]).generate_state(1, np.uint32)[0])


# -- subcommands ---------------------------------------------------------------------


def cmd_gen(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    real, integer = [], []
    for n in args.n:
        for idx in range(args.count):
            inst = generate_real(n, derive_seed(args.seed, n, idx), id=f"real-n{n}-{idx:03d}")
            real.append(inst)
            integer.append(to_integer(inst))
    save_dataset(out / "real.jsonl", real)
    save_dataset(out / "integer.jsonl", integer)
    print(f"wrote {len(real)} real and {len(integer)} integer instances to {out}", file=sys.stderr)
    return EXIT_OK


def _pick_instance(instances, which: str | None):
    if which is None:
        return instances[0]
    for inst in instances:
        if inst.id == which:
            return inst
    if which.isdigit() and int(which) < len(instances):
        return instances[int(which)]
    raise UsageError(f"no instance {which!r} in dataset")


def cmd_run(args, cfg: dict) -> int:
    instances = load_dataset(cfg["dataset"])
    if not instances:
        raise DatasetError("dataset is empty")
    inst = _pick_instance(instances, args.instance)
    methods = _methods(cfg["method"])
    if len(methods) != 1:
        raise UsageError("run takes exactly one method")
    method = methods[0]
    bits = cfg.get("qpe_bits") or []
    if method == Method.IF_APPROX.value and len(bits) != 1:
        raise UsageError("if-approx needs exactly one --qpe-bits value")
    qpe_bits = bits[0] if method == Method.IF_APPROX.value else None
    depths = tuple(cfg["depths"])
    if args.protocol == "qtg":
        depths = (qtg_matched_depth(inst.n),) if args.depth is None else (args.depth,)
    job = Job(dumps_instance(inst), method, qpe_bits, depths, cfg["epsilon"], cfg["max_iters"],
              protocol=args.protocol)
    records = run_job(job)
    sink = open(args.out, "a", encoding="utf-8") if args.out else sys.stdout
    try:
        for rec in records:
            sink.write(json.dumps(rec, separators=(",", ":")) + "\n")
    finally:
        if sink is not sys.stdout:
            sink.close()
    if any(rec["status"] != "ok" for rec in records):
        log.error("run aborted: %s", records[-1]["status"])
        return EXIT_ABORT
    return EXIT_OK


def cmd_bench(args, cfg: dict) -> int:
    bench_cfg = BenchConfig(
        dataset=cfg["dataset"],
        methods=tuple(_methods(cfg["method"])),
        depths=tuple(cfg["depths"]),
        qpe_bits=tuple(cfg.get("qpe_bits") or ()),
        epsilon=cfg["epsilon"],
        seed=cfg["seed"],
        out=cfg["out"],
        workers=cfg["workers"],
        max_iters=cfg["max_iters"],
        limit=cfg.get("limit"),
    )
    instances = load_dataset(bench_cfg.dataset)
    out = run_bench(bench_cfg, instances)
    print(f"results in {out}", file=sys.stderr)
    return EXIT_OK


def cmd_theta(args) -> int:
    from .theta import build_theta_table

    table = build_theta_table(args.qpe_bits, args.supersample)
    K, step = table.period, 1 << table.supersample
    sink = open(args.out, "w", encoding="utf-8", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(sink, lineterminator="\n")
        writer.writerow(["g", "theta"])
        # one full period centred on zero, in increasing g
        g = np.arange(table.values.size) / step
        g = np.where(g >= K / 2, g - K, g)
        for idx in np.argsort(g, kind="stable"):
            writer.writerow([repr(float(g[idx])), repr(float(table.values[idx]))])
    finally:
        if sink is not sys.stdout:
            sink.close()
    return EXIT_OK


def cmd_report(args) -> int:
    out = Path(args.out)
    records = read_records(out / "records.jsonl")
    if not records:
        raise FileNotFoundError(f"no records in {out / 'records.jsonl'}")
    instances = load_dataset(args.dataset) if args.dataset else None
    write_reports(records, out, instances)
    print(f"regenerated reports from {len(records)} records", file=sys.stderr)
    return EXIT_OK


# -- argument handling -----------------------------------------------------------------


DEFAULTS = {
    "dataset": None,
    "method": ["if-exact"],
    "depths": list(DEFAULT_DEPTHS),
    "qpe_bits": [],
    "epsilon": 0.5,
    "seed": 0,
    "out": None,
    "workers": 1,
    "max_iters": 100,
    "limit": None,
}


def _add_sweep_flags(p: argparse.ArgumentParser, bench: bool) -> None:
    p.add_argument("--config", help="JSON file of option defaults; flags override it")
    p.add_argument("--dataset", help="dataset file (JSON lines)")
    p.add_argument("--method", action="append", help="method name; comma list or repeat for bench")
    p.add_argument("--depths", type=int_list, help="depth schedule, e.g. 1,2,4,8 or 1:16")
    p.add_argument("--qpe-bits", dest="qpe_bits", type=int_list, help="phase-register sizes for if-approx")
    p.add_argument("--epsilon", type=float, help="sign-function shift in [0, 1)")
    p.add_argument("--seed", type=int)
    p.add_argument("--max-iters", dest="max_iters", type=int, help="L-BFGS iterations per depth")
    if bench:
        p.add_argument("--out", help="results directory")
        p.add_argument("--workers", type=int, help="worker processes")
        p.add_argument("--limit", type=int, help="use only the first LIMIT instances")
    else:
        p.add_argument("--out", help="append records here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ifqaoa", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="generate the real and integer datasets")
    g.add_argument("--n", "--n-list", dest="n", type=int_list, required=True, help="item counts")
    g.add_argument("--count", type=int, required=True, help="instances per item count")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True, help="output directory")

    r = sub.add_parser("run", parents=[common], help="optimize one instance with one method")
    _add_sweep_flags(r, bench=False)
    r.add_argument("--instance", help="instance id or index (default: first)")
    r.add_argument("--protocol", choices=("sequential", "qtg"), default="sequential")
    r.add_argument("--depth", type=int, help="depth for the qtg protocol (default: matched depth)")

    b = sub.add_parser("bench", parents=[common], help="sweep instances x methods x register sizes")
    _add_sweep_flags(b, bench=True)

    t = sub.add_parser("theta", parents=[common], help="dump the sign-function table as CSV")
    t.add_argument("--qpe-bits", dest="qpe_bits", type=int, required=True)
    t.add_argument("--supersample", type=int, default=3)
    t.add_argument("--out", help="CSV file (default: stdout)")

    rp = sub.add_parser("report", parents=[common], help="rebuild summaries from records.jsonl")
    rp.add_argument("--out", required=True, help="results directory")
    rp.add_argument("--dataset", help="dataset, for per-instance weight ratios")
    return parser


def merge_config(args) -> dict:
    """Defaults, then the JSON config file, then explicit flags."""
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            loaded = json.load(fh)
        if not isinstance(loaded, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        for key in ("method", "depths", "qpe_bits"):
            if isinstance(loaded.get(key), (str, int)):
                loaded[key] = int_list(loaded[key]) if key != "method" else [loaded[key]]
        cfg.update(loaded)
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    if cfg["dataset"] is None:
        raise UsageError("--dataset is required")
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "gen":
            return cmd_gen(args)
        if args.command == "theta":
            return cmd_theta(args)
        if args.command == "report":
            return cmd_report(args)
        cfg = merge_config(args)
        if args.command == "bench" and cfg["out"] is None:
            cfg["out"] = "results"
        return (cmd_run if args.command == "run" else cmd_bench)(args, cfg)
    except VanishingSuccessError as exc:
        print(f"ifqaoa: aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except UsageError as exc:
        print(f"ifqaoa: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DatasetError as exc:
        print(f"ifqaoa: invalid data: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"ifqaoa: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        # bad option values (bounds, register sizes, epsilon)
        print(f"ifqaoa: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
