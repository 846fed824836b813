"""``spmd`` command line: eval, plan, run, worker, bench, speedup.

Exit status is 0 on success, 1 on runtime failure (worker failure, timeout,
spawn error) and 2 on usage or validation errors.  Data goes to stdout,
diagnostics to stderr.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2
WORKDIR_ENV = "SPMD_WORKDIR"

from .expr import PAPER_EXPRESSION


def _int_list(text):
    try:
        items = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}")
    if not items:
        raise argparse.ArgumentTypeError("list must not be empty")
    return tuple(items)


def _name_list(text):
    return tuple(t.strip() for t in text.split(",") if t.strip())


def _err(msg):
    print(f"error: {msg}", file=sys.stderr)


def _fmt_ratio(r):
    text = f"{r:.4f}".rstrip("0").rstrip(".")
    return text or "0"


def _workdir(args):
    wd = args.workdir or os.environ.get(WORKDIR_ENV)
    if not wd:
        raise ValueError(f"--workdir is required (or set {WORKDIR_ENV})")
    path = Path(wd).resolve()
    path.mkdir(parents=True, exist_ok=True)
    return path


def _launch_config(args, workdir):
    from .master import LaunchConfig
    return LaunchConfig(
        workdir=workdir,
        nodes=args.nodes,
        launcher_template=args.launcher,
        poll_interval=args.poll_ms / 1000.0,
        timeout=args.timeout_s,
    )


# -- subcommands -------------------------------------------------------------

def cmd_eval(args):
    import numpy as np

    from .expr import eval_grid, parse
    from .protocol import format_double

    tree = parse(args.expr)
    if args.x is not None:
        points = np.array([args.x])
    else:
        if args.start is None or args.stop is None:
            raise ValueError("give --x, or --from and --to")
        span = args.stop - args.start
        n = round(span / args.step)
        if n < 0 or abs(n * args.step - span) > 1e-9 * max(abs(span), args.step):
            raise ValueError("--to - --from must be a non-negative multiple of --step")
        points = args.start + np.arange(n + 1, dtype=np.int64).astype(np.float64) * args.step
    values, nan_count, _ = eval_grid(tree, points)
    sys.stdout.write("".join(format_double(v) + "\n" for v in values.tolist()))
    print(f"nan_count={nan_count}", file=sys.stderr)
    return EXIT_OK


def cmd_plan(args):
    from .grid import GridSpec, plan_partitions

    grid = GridSpec(args.maxvalue, args.step)
    print("rank\tstart_index\tend_index\tpoints")
    for p in plan_partitions(grid, args.nproc):
        print(f"{p.rank}\t{p.start_index}\t{p.end_index}\t{p.size}")
    return EXIT_OK


def cmd_run(args):
    from .grid import GridSpec
    from .master import JobSpec, run_job
    from .protocol import dump_result

    workdir = _workdir(args)
    job = JobSpec(args.nproc, GridSpec(args.maxvalue, args.step), args.expr,
                  store_values=not args.no_store)
    config = _launch_config(args, workdir)
    final = workdir / "final.out"
    if final.exists():
        final.unlink()
    merged, timing = run_job(job, config)
    if job.store_values:
        dump_result(final, merged.as_worker_result())
    for line in timing.lines():
        print(line)
    print(f"value_count={merged.value_count}")
    print(f"nan_count={merged.total_nan_count}")
    return EXIT_OK


def cmd_worker(args):
    from .worker import run_worker
    return run_worker(args.spec)


def cmd_bench(args):
    from .bench import (BenchConfig, check_table1, emit_csv, emit_plot_data,
                        render_table, run_grid)

    if args.check_table1:
        checks = check_table1()
        for c in checks:
            if isinstance(c.value, float):
                print(f"{c.name}: {_fmt_ratio(c.value)} (reported about {c.expected}) "
                      f"{'ok' if c.ok else 'MISMATCH'}")
            else:
                print(f"{c.name}: {c.value} {'ok' if c.ok else 'MISMATCH'}")
        if all(c.ok for c in checks if c.name.startswith("best nproc")):
            print("best nproc = 8 for all m")
        return EXIT_OK if all(c.ok for c in checks) else EXIT_RUNTIME

    config = BenchConfig(
        nproc_list=args.nproc_list, m_list=args.m_list, scale=args.scale,
        step=args.step, expression=args.expr, store_values=not args.no_store,
        repetitions=args.repetitions)
    launch = _launch_config(args, _workdir(args))

    def progress(m, nproc, cpu, wall):
        print(f"m={m} nproc={nproc} cpu={cpu:.4f}s wall={wall:.4f}s", file=sys.stderr)

    table = run_grid(config, launch, progress=progress)
    print(render_table(table))
    if args.csv:
        emit_csv(table, args.csv)
    if args.plot_dir:
        emit_plot_data(table, args.plot_dir)
    return EXIT_OK


def cmd_speedup(args):
    from .bench import speedup
    print(_fmt_ratio(speedup(args.ref, args.val)))
    return EXIT_OK


# -- parser ------------------------------------------------------------------

def _add_launch_flags(p):
    p.add_argument("--workdir",
                   help=f"shared work directory, created if missing (default: ${WORKDIR_ENV})")
    p.add_argument("--nodes", type=_name_list, default=(),
                   help="comma-separated node names; none means local workers")
    p.add_argument("--launcher", default=None,
                   help="launch command template with {spec} and, with --nodes, {node}; "
                        "e.g. 'ssh {node} spmd worker --spec {spec}'")
    p.add_argument("--no-store", action="store_true",
                   help="workers report counts and CPU time but do not save values")
    p.add_argument("--poll-ms", type=float, default=100.0,
                   help="lock polling interval in ms (default: %(default)s)")
    p.add_argument("--timeout-s", type=float, default=None,
                   help="give up after this many seconds (default: wait forever; "
                        "setting one is strongly recommended)")


def build_parser():
    parser = argparse.ArgumentParser(prog="spmd", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)
    step_help = "grid spacing (default: %(default)s)"
    expr_help = "expression in x (default: %(default)r)"

    p = sub.add_parser("eval", help="evaluate an expression")
    p.add_argument("--expr", required=True, help="expression in x, e.g. 'sin(x)^2'")
    p.add_argument("--x", type=float, help="single point")
    p.add_argument("--from", dest="start", type=float, help="first point of a range")
    p.add_argument("--to", dest="stop", type=float, help="last point of a range")
    p.add_argument("--step", type=float, default=0.001, help=step_help)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("plan", help="show the partition table")
    p.add_argument("--maxvalue", type=float, required=True, help="upper end of the grid")
    p.add_argument("--step", type=float, default=0.001, help=step_help)
    p.add_argument("--nproc", type=int, required=True, help="number of workers")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("run", help="run one parallel job")
    p.add_argument("--nproc", type=int, required=True, help="number of workers")
    p.add_argument("--maxvalue", type=float, required=True, help="upper end of the grid")
    p.add_argument("--step", type=float, default=0.001, help=step_help)
    p.add_argument("--expr", default=PAPER_EXPRESSION, help=expr_help)
    _add_launch_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("worker", help="worker mode (started by the master)")
    p.add_argument("--spec", required=True, help="path to fileworker<rank>.spec")
    p.set_defaults(func=cmd_worker)

    p = sub.add_parser("bench", help="run the m x nproc timing grid")
    p.add_argument("--nproc-list", type=_int_list, default="2,4,6,8,10,12,14,16",
                   help="worker counts (default: %(default)s)")
    p.add_argument("--m-list", type=_int_list, default="2,4,6",
                   help="data-size multipliers (default: %(default)s)")
    p.add_argument("--scale", type=float, default=10000.0,
                   help="maxvalue = m * scale (default: %(default)g)")
    p.add_argument("--step", type=float, default=0.001, help=step_help)
    p.add_argument("--expr", default=PAPER_EXPRESSION, help=expr_help)
    p.add_argument("--repetitions", type=int, default=1,
                   help="runs averaged per cell (default: %(default)s)")
    p.add_argument("--csv", help="write m,nproc,seconds,wall_seconds rows here")
    p.add_argument("--plot-dir", help="write one series file per m here")
    p.add_argument("--check-table1", action="store_true",
                   help="skip live runs; verify speedups against the embedded reference table")
    _add_launch_flags(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("speedup", help="print t_ref / t")
    p.add_argument("--ref", type=float, required=True, help="reference time")
    p.add_argument("--val", type=float, required=True, help="compared time")
    p.set_defaults(func=cmd_speedup)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(name)s: %(levelname)s: %(message)s")

    from .errors import (CountMismatch, ExpressionError, MalformedResult,
                         SpawnError, SpmdError, TimeoutExpired, WorkerFailed)
    try:
        return args.func(args)
    except ExpressionError as exc:
        _err(exc.diagnostic())
        return EXIT_USAGE
    except (WorkerFailed, TimeoutExpired, SpawnError, CountMismatch, MalformedResult) as exc:
        _err(str(exc))
        return EXIT_RUNTIME
    except SpmdError as exc:
        if isinstance(exc, ValueError):
            _err(str(exc))
            return EXIT_USAGE
        _err(str(exc))
        return EXIT_RUNTIME
    except ValueError as exc:
        _err(str(exc))
        return EXIT_USAGE
    except OSError as exc:
        _err(str(exc))
        return EXIT_RUNTIME
