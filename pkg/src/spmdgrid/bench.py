"""Benchmark harness for the (m x nproc) experiment grid.

Each cell is the summed worker CPU time of one job with
``maxvalue = m * scale``.  The reference timings from the original cluster
runs are embedded for regression checks of the speedup arithmetic.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .errors import NonPositiveTime, RowNotFound, SpmdError
from .expr import PAPER_EXPRESSION
from .grid import GridSpec
from .master import JobSpec, LaunchConfig, run_job

log = logging.getLogger(__name__)

DEFAULT_NPROC_LIST = (2, 4, 6, 8, 10, 12, 14, 16)
DEFAULT_M_LIST = (2, 4, 6)
DEFAULT_SCALE = 10000.0
DEFAULT_STEP = 0.001

# Total worker CPU seconds, with result storage (2 dual-Xeon nodes, HT on).
TABLE1_NPROC = DEFAULT_NPROC_LIST
TABLE1_ROWS = {
    2: (48.29, 27.70, 32.51, 22.56, 28.14, 31.34, 33.28, 35.04),
    4: (126.53, 65.21, 74.79, 54.27, 63.17, 74.29, 83.01, 91.34),
    6: (263.37, 109.48, 121.30, 78.41, 116.23, 125.69, 138.51, 145.93),
}


@dataclass(frozen=True)
class BenchConfig:
    nproc_list: tuple = DEFAULT_NPROC_LIST
    m_list: tuple = DEFAULT_M_LIST
    scale: float = DEFAULT_SCALE
    step: float = DEFAULT_STEP
    expression: str = PAPER_EXPRESSION
    store_values: bool = True
    repetitions: int = 1

    def __post_init__(self):
        if not self.nproc_list or not self.m_list:
            raise ValueError("nproc_list and m_list must be non-empty")
        if not self.scale > 0:
            raise ValueError("scale must be > 0")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")

    def maxvalue(self, m):
        return m * self.scale


@dataclass
class BenchTable:
    """Rows are m values, columns nproc values, cells seconds."""
    m_values: tuple
    nproc_values: tuple
    seconds: dict
    wall_seconds: Optional[dict] = field(default=None)

    def __post_init__(self):
        self.m_values = tuple(self.m_values)
        self.nproc_values = tuple(self.nproc_values)
        for m in self.m_values:
            for p in self.nproc_values:
                if (m, p) not in self.seconds:
                    raise ValueError(f"missing cell m={m}, nproc={p}")
                if not self.seconds[(m, p)] > 0:
                    raise ValueError(f"cell m={m}, nproc={p} is not positive")

    def cell(self, m, nproc):
        return self.seconds[(m, nproc)]

    def row(self, m):
        if m not in self.m_values:
            raise RowNotFound(m)
        return [self.seconds[(m, p)] for p in self.nproc_values]


def embedded_table1() -> BenchTable:
    seconds = {(m, p): v for m, row in TABLE1_ROWS.items()
               for p, v in zip(TABLE1_NPROC, row)}
    return BenchTable(tuple(TABLE1_ROWS), TABLE1_NPROC, seconds)


def speedup(t_ref: float, t: float) -> float:
    if not (t_ref > 0 and t > 0):
        raise NonPositiveTime(f"times must be positive, got {t_ref!r} and {t!r}")
    return t_ref / t


def best_nproc(table: BenchTable, m) -> int:
    row = table.row(m)
    best = min(range(len(row)), key=lambda j: (row[j], table.nproc_values[j]))
    return table.nproc_values[best]


def run_grid(config: BenchConfig, launch: LaunchConfig, progress=None) -> BenchTable:
    seconds, wall = {}, {}
    for m in config.m_list:
        grid = GridSpec(config.maxvalue(m), config.step)
        for nproc in config.nproc_list:
            job = JobSpec(nproc, grid, config.expression, config.store_values)
            cpu_total = wall_total = 0.0
            for _ in range(config.repetitions):
                try:
                    _, timing = run_job(job, launch)
                except SpmdError as exc:
                    raise SpmdError(f"bench cell m={m}, nproc={nproc} failed: {exc}") from exc
                cpu_total += timing.sum_worker_cpu_seconds
                wall_total += timing.wall_elapsed_seconds
            seconds[(m, nproc)] = cpu_total / config.repetitions
            wall[(m, nproc)] = wall_total / config.repetitions
            log.info("m=%s nproc=%s cpu=%.4f wall=%.4f", m, nproc,
                     seconds[(m, nproc)], wall[(m, nproc)])
            if progress:
                progress(m, nproc, seconds[(m, nproc)], wall[(m, nproc)])
    return BenchTable(tuple(config.m_list), tuple(config.nproc_list), seconds, wall)


def render_table(table: BenchTable) -> str:
    width = max(8, *(len(f"{v:.2f}") + 1 for v in table.seconds.values()))
    head = "m\\nproc".ljust(8) + "".join(str(p).rjust(width) for p in table.nproc_values)
    lines = [head, "-" * len(head)]
    for m in table.m_values:
        lines.append(str(m).ljust(8) + "".join(f"{v:.2f}".rjust(width) for v in table.row(m)))
    return "\n".join(lines)


def emit_csv(table: BenchTable, path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if table.wall_seconds is not None:
            w.writerow(["m", "nproc", "seconds", "wall_seconds"])
        else:
            w.writerow(["m", "nproc", "seconds"])
        for m in table.m_values:
            for p in table.nproc_values:
                row = [m, p, repr(table.seconds[(m, p)])]
                if table.wall_seconds is not None:
                    row.append(repr(table.wall_seconds[(m, p)]))
                w.writerow(row)
    return path


def read_csv(path) -> BenchTable:
    m_values, nproc_values, seconds, wall = [], [], {}, {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        has_wall = "wall_seconds" in (reader.fieldnames or ())
        for rec in reader:
            m, p = int(rec["m"]), int(rec["nproc"])
            if m not in m_values:
                m_values.append(m)
            if p not in nproc_values:
                nproc_values.append(p)
            seconds[(m, p)] = float(rec["seconds"])
            if has_wall:
                wall[(m, p)] = float(rec["wall_seconds"])
    return BenchTable(tuple(m_values), tuple(nproc_values), seconds,
                      wall if has_wall else None)


def emit_plot_data(table: BenchTable, directory) -> list[Path]:
    """One whitespace-separated ``nproc seconds`` series file per m."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for m in table.m_values:
        path = directory / f"series_m{m}.dat"
        rows = [f"# m={m}", "# nproc seconds"]
        rows += [f"{p} {v!r}" for p, v in zip(table.nproc_values, table.row(m))]
        path.write_text("\n".join(rows) + "\n")
        paths.append(path)
    return paths


@dataclass(frozen=True)
class Table1Check:
    name: str
    value: object
    expected: object
    ok: bool


def check_table1(table: Optional[BenchTable] = None) -> list[Table1Check]:
    """Speedup and best-nproc observations recomputed from the reference table."""
    t = table or embedded_table1()
    s2 = speedup(t.cell(2, 2), t.cell(2, 8))
    s6 = speedup(t.cell(6, 2), t.cell(6, 8))
    checks = [
        Table1Check("speedup m=2, nproc 8 vs 2", s2, 2.14, abs(s2 - 2.14) <= 0.005),
        Table1Check("speedup m=6, nproc 8 vs 2", s6, 3.35,
                    abs(s6 - 3.3588) <= 0.001 and abs(round(s6, 2) - 3.35) <= 0.01),
    ]
    for m in t.m_values:
        b = best_nproc(t, m)
        checks.append(Table1Check(f"best nproc for m={m}", b, 8, b == 8))
    for m in t.m_values:
        peak = t.cell(m, 4) < t.cell(m, 2) and t.cell(m, 4) < t.cell(m, 6)
        checks.append(Table1Check(f"local peak at nproc=4 for m={m}", peak, True, peak))
    return checks
