"""Command-line interface.

    batchmesh [options] INPUT.poly        refine one PSLG
    batchmesh bench DIR [options]         ablation/timing table over a corpus
    batchmesh corpus DIR                  write the generated corpus as .poly

Every option can also come from an environment variable named
``BATCHMESH_<OPTION>`` (upper case, dashes as underscores); flags on the
command line win.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
import time
from pathlib import Path

from .cdt import AllCollinear, build_cdt
from .mesh import MeshError
from .meshio import write_metrics, write_node_ele, write_svg
from .pslg import PslgError, read_poly, write_poly
from .refine import EngineConfig, IterationCap, QualityCriteria, refine
from .rules import DomainError, RuleFlags, slowdown_percent
from .verify import check_all

ENV_PREFIX = "BATCHMESH_"
EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_CAP = 0, 1, 2, 3
VERIFY_FULL_LIMIT = 10 ** 5
VERIFY_SAMPLE = 10 ** 4


def _truthy(text):
    return str(text).strip().lower() in ("1", "true", "yes", "on")


def _apply_env(parser: argparse.ArgumentParser, environ=None):
    """Override parser defaults from BATCHMESH_* variables."""
    environ = os.environ if environ is None else environ
    for action in parser._actions:
        if not action.option_strings or action.dest == "help":
            continue
        key = ENV_PREFIX + action.dest.upper()
        if key not in environ:
            continue
        raw = environ[key]
        if isinstance(action, argparse._StoreTrueAction):
            parser.set_defaults(**{action.dest: _truthy(raw)})
        else:
            conv = action.type or str
            parser.set_defaults(**{action.dest: conv(raw)})


def _add_engine_options(p: argparse.ArgumentParser):
    p.add_argument("--theta", type=float, default=20.0, help="minimum angle bound in degrees")
    p.add_argument("--ell", type=float, default=math.inf, help="maximum edge length")
    p.add_argument("--mode", choices=["ruppert", "chew"], default="ruppert")
    p.add_argument("--execution", choices=["sequential", "parallel", "shuffled"], default="sequential")
    p.add_argument("--threads", type=int, default=4, help="executor count in parallel mode")
    p.add_argument("--cavity-n", type=int, default=32, help="cavity approximation size")
    p.add_argument("--gamma", type=float, default=0.2, help="straggler fraction for early stop")
    p.add_argument("--compaction-threshold", type=int, default=1024)
    for k in range(1, 6):
        p.add_argument(f"--no-rule{k}", action="store_true", help=f"disable rule {k}")
    p.add_argument("--iteration-cap", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)


def _config(args) -> EngineConfig:
    flags = RuleFlags.without(*[k for k in range(1, 6) if getattr(args, f"no_rule{k}")],
                              rule1_compaction_threshold=args.compaction_threshold,
                              rule3_gamma=args.gamma)
    return EngineConfig(
        quality=QualityCriteria(args.theta, args.ell, args.mode), rules=flags,
        execution=args.execution, threads=args.threads, seed=args.seed,
        cavity_n=args.cavity_n, iteration_cap=args.iteration_cap)


def verify(m) -> list[str]:
    if m.n_vertices <= VERIFY_FULL_LIMIT:
        return check_all(m)
    return check_all(m, sample=VERIFY_SAMPLE)


def summary_text(report, name="") -> str:
    q = report.quality
    out = io.StringIO()
    if name:
        print(f"input:        {name}", file=out)
    print(f"points:       {q.points} ({q.steiner} Steiner)", file=out)
    print(f"triangles:    {q.triangles}", file=out)
    print(f"bad:          {q.bad_triangles} ({q.bad_area_percent:.4f}% of area)", file=out)
    print(f"min angle:    {q.min_angle:.4f} deg", file=out)
    print(f"max edge:     {q.max_edge:.6g}", file=out)
    print(f"batches:      {report.n_batches}", file=out)
    print(f"wall time:    {report.wall_time:.3f} s", file=out)
    if report.batches:
        print(f"{'batch':>6} {'attempted':>9} {'useful':>7} {'latency_ms':>10} {'throughput':>11} {'waste':>6}",
              file=out)
        for b in report.batches:
            print(f"{b.batch:>6} {b.attempted:>9} {b.useful:>7} {b.latency * 1e3:>10.2f} "
                  f"{b.throughput:>11.1f} {b.waste_fraction:>6.2f}", file=out)
    return out.getvalue()


def run_refine(argv) -> int:
    p = argparse.ArgumentParser(prog="batchmesh", description="Batch constrained Delaunay refinement.")
    p.add_argument("input", help=".poly file")
    p.add_argument("-o", "--output", help="output base path (default: input without suffix)")
    p.add_argument("--svg", help="write an SVG drawing here")
    p.add_argument("--metrics", help="write per-batch metrics (NDJSON) here")
    p.add_argument("--skip-verify", action="store_true")
    p.add_argument("-q", "--quiet", action="store_true")
    _add_engine_options(p)
    _apply_env(p)
    args = p.parse_args(argv)

    try:
        cfg = _config(args)
        pslg = read_poly(Path(args.input).read_text())
        m = build_cdt(pslg)
    except (OSError, PslgError, AllCollinear, MeshError, DomainError, ValueError) as e:
        print(f"batchmesh: {args.input}: {e}", file=sys.stderr)
        return EXIT_INPUT

    code = EXIT_OK
    try:
        m, report = refine(m, cfg.quality, cfg)
    except IterationCap as e:
        print(f"batchmesh: {e}", file=sys.stderr)
        m, report = e.mesh, e.report
        code = EXIT_CAP

    base = Path(args.output) if args.output else Path(args.input).with_suffix("")
    node, ele = write_node_ele(m)
    base.with_suffix(".node").write_text(node)
    base.with_suffix(".ele").write_text(ele)
    if args.svg:
        Path(args.svg).write_text(write_svg(m, cfg.quality))
    if args.metrics:
        Path(args.metrics).write_text(write_metrics(report, cfg.rules))
    if not args.quiet:
        print(summary_text(report, args.input), end="")

    if not args.skip_verify:
        errs = verify(m)
        if errs:
            for e in errs[:20]:
                print(f"batchmesh: verification: {e}", file=sys.stderr)
            return EXIT_FAIL
    return code


BENCH_CONFIGS = {
    "all": (),
    "no-rule1": (1,),
    "no-rule2": (2,),
    "no-rule3": (3,),
    "no-rule4": (4,),
    "no-rule5": (5,),
}


def bench_rows(inputs, configs, executions, args):
    """Run every (input, config, execution) triple; one dict per run."""
    rows = []
    for name, pslg in inputs:
        base_time = {}
        for execution in executions:
            for cname in configs:
                row = {"input": name, "config": cname, "execution": execution}
                try:
                    flags = RuleFlags.without(*BENCH_CONFIGS[cname],
                                              rule1_compaction_threshold=args.compaction_threshold,
                                              rule3_gamma=args.gamma)
                    cfg = EngineConfig(quality=QualityCriteria(args.theta, args.ell, args.mode), rules=flags,
                                       execution=execution, threads=args.threads, seed=args.seed,
                                       cavity_n=args.cavity_n, iteration_cap=args.iteration_cap)
                    t0 = time.perf_counter()
                    m = build_cdt(pslg)
                    m, report = refine(m, cfg.quality, cfg)
                    elapsed = time.perf_counter() - t0
                    errs = [] if args.skip_verify else verify(m)
                    row.update(time_s=elapsed, batches=report.n_batches, steiner=report.quality.steiner,
                               bad_area_percent=report.quality.bad_area_percent,
                               valid="skipped" if args.skip_verify else ("yes" if not errs else "no"))
                    if cname == "all":
                        base_time[execution] = elapsed
                except Exception as e:  # record and keep going
                    row.update(error=f"{type(e).__name__}: {e}")
                rows.append(row)
        for row in rows:
            if row["input"] == name and "time_s" in row and row["execution"] in base_time:
                row["slowdown_percent"] = slowdown_percent(base_time[row["execution"]], row["time_s"])
    return rows


BENCH_COLUMNS = ["input", "config", "execution", "time_s", "batches", "steiner", "bad_area_percent",
                 "valid", "slowdown_percent", "error"]


def format_table(rows) -> str:
    def cell(v):
        if isinstance(v, float):
            return f"{v:.3f}"
        return "" if v is None else str(v)

    table = [BENCH_COLUMNS] + [[cell(r.get(c)) for c in BENCH_COLUMNS] for r in rows]
    widths = [max(len(r[k]) for r in table) for k in range(len(BENCH_COLUMNS))]
    return "\n".join("  ".join(v.ljust(w) for v, w in zip(r, widths)).rstrip() for r in table) + "\n"


def run_bench(argv) -> int:
    p = argparse.ArgumentParser(prog="batchmesh bench", description="Rule ablation and timing table.")
    p.add_argument("corpus", nargs="?", help="directory of .poly files")
    p.add_argument("--generated", action="store_true", help="use the built-in generated corpus")
    p.add_argument("--max-points", type=int, help="skip generated inputs larger than this")
    p.add_argument("--configs", default="all,no-rule1,no-rule2,no-rule3,no-rule4,no-rule5",
                   help="comma-separated subset of " + ",".join(BENCH_CONFIGS))
    p.add_argument("--executions", default="sequential")
    p.add_argument("--csv", help="also write the table as CSV here")
    p.add_argument("--skip-verify", action="store_true")
    _add_engine_options(p)
    _apply_env(p)
    args = p.parse_args(argv)

    configs = [c for c in args.configs.split(",") if c]
    bad = [c for c in configs if c not in BENCH_CONFIGS]
    if bad:
        print(f"batchmesh bench: unknown configs {bad}", file=sys.stderr)
        return EXIT_INPUT
    executions = [e for e in args.executions.split(",") if e]

    inputs = []
    if args.generated:
        from .corpus import corpus
        inputs += [(e.name, e.pslg) for e in corpus(args.max_points)]
    if args.corpus:
        root = Path(args.corpus)
        if not root.is_dir():
            print(f"batchmesh bench: {root} is not a directory", file=sys.stderr)
            return EXIT_INPUT
        for path in sorted(root.glob("*.poly")):
            try:
                inputs.append((path.name, read_poly(path.read_text())))
            except PslgError as e:
                print(f"batchmesh bench: {path}: {e}", file=sys.stderr)

    rows = bench_rows(inputs, configs, executions, args)
    print(format_table(rows), end="")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=BENCH_COLUMNS)
            w.writeheader()
            for r in rows:
                w.writerow({c: r.get(c, "") for c in BENCH_COLUMNS})
    return EXIT_OK


def run_corpus(argv) -> int:
    p = argparse.ArgumentParser(prog="batchmesh corpus", description="Write the generated corpus.")
    p.add_argument("outdir")
    p.add_argument("--max-points", type=int)
    args = p.parse_args(argv)
    from .corpus import corpus

    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    for e in corpus(args.max_points):
        (out / f"{e.name}.poly").write_text(write_poly(e.pslg))
        print(out / f"{e.name}.poly")
    return EXIT_OK


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] == "bench":
        return run_bench(argv[1:])
    if argv and argv[0] == "corpus":
        return run_corpus(argv[1:])
    return run_refine(argv)


if __name__ == "__main__":
    sys.exit(main())
