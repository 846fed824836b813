"""Job orchestration over the shared work directory.

The master never computes.  It writes one lock and one spec per rank,
launches every worker, then watches the lock files until all are gone.
Process handles are only used to notice spawn failures, because remote
launchers such as ``ssh`` may return long before the worker finishes.
"""
from __future__ import annotations

import logging
import os
import shlex
import subprocess
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import protocol
from .errors import (ConfigError, CountMismatch, EmptyNodeList, EmptyResults,
                     InvalidPartitioning, SpawnError, TimeoutExpired, WorkerFailed)
from .expr import parse
from .grid import GridSpec, plan_partitions
from .protocol import WorkerResult, WorkerSpec

log = logging.getLogger(__name__)

DEFAULT_POLL_INTERVAL = 0.1
SSH_TEMPLATE = "ssh {node} spmd worker --spec {spec}"


@dataclass(frozen=True)
class JobSpec:
    nproc: int
    grid: GridSpec
    expression: str
    store_values: bool = True

    def __post_init__(self):
        parse(self.expression)
        if not 1 <= self.nproc <= self.grid.n:
            raise InvalidPartitioning(f"nproc must be in [1, {self.grid.n}], got {self.nproc}")


@dataclass(frozen=True)
class LaunchConfig:
    """How and where workers are started.

    With no nodes and no template, workers are local ``python -m spmdgrid``
    processes.  A template may use ``{spec}`` (required) and ``{node}``
    (required exactly when nodes are given).
    """
    workdir: Path
    nodes: tuple = ()
    launcher_template: Optional[str] = None
    poll_interval: float = DEFAULT_POLL_INTERVAL
    timeout: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "workdir", Path(self.workdir))
        object.__setattr__(self, "nodes", tuple(self.nodes))
        if not self.poll_interval > 0:
            raise ConfigError("poll_interval must be > 0")
        if self.timeout is not None and not self.timeout > 0:
            raise ConfigError("timeout must be > 0 or None")
        tmpl = self.launcher_template
        if tmpl is None:
            if self.nodes:
                raise ConfigError("nodes given but no launcher template")
            return
        if "{spec}" not in tmpl:
            raise ConfigError("launcher template must contain {spec}")
        if self.nodes and "{node}" not in tmpl:
            raise ConfigError("launcher template must contain {node} when nodes are given")
        if not self.nodes and "{node}" in tmpl:
            raise ConfigError("launcher template uses {node} but no nodes were given")


@dataclass(frozen=True)
class TimingReport:
    wall_elapsed_seconds: float
    master_cpu_seconds: float
    sum_worker_cpu_seconds: float
    mean_worker_cpu_seconds: float

    def lines(self):
        return [f"{name}={getattr(self, name)!r}" for name in self.__dataclass_fields__]


@dataclass(eq=False)
class MergedResult:
    values: np.ndarray
    total_nan_count: int
    per_worker: tuple

    @property
    def value_count(self):
        return sum(r.value_count for r in self.per_worker)

    def as_worker_result(self) -> WorkerResult:
        """Rank-less result record, the format of ``final.out``."""
        return WorkerResult(
            rank=None,
            cpu_seconds=sum(r.cpu_seconds for r in self.per_worker),
            nan_count=self.total_nan_count,
            values=self.values,
            value_count=self.value_count,
        )


def assign_node(rank: int, nodes: Sequence[str]) -> str:
    if not nodes:
        raise EmptyNodeList("no nodes to assign")
    return nodes[rank % len(nodes)]


def _local_env():
    env = dict(os.environ)
    src = str(Path(__file__).resolve().parent.parent)
    env["PYTHONPATH"] = os.pathsep.join(p for p in (src, env.get("PYTHONPATH")) if p)
    return env


def build_launch_command(rank, spec_path, config: LaunchConfig) -> list[str]:
    spec = str(spec_path)
    if config.launcher_template is None:
        return [sys.executable, "-m", "spmdgrid", "worker", "--spec", spec]
    text = config.launcher_template.replace("{spec}", shlex.quote(spec))
    if config.nodes:
        text = text.replace("{node}", shlex.quote(assign_node(rank, config.nodes)))
    return shlex.split(text)


def launch_worker(rank, spec_path, config: LaunchConfig) -> subprocess.Popen:
    argv = build_launch_command(rank, spec_path, config)
    log.debug("launching rank %d: %s", rank, shlex.join(argv))
    try:
        return subprocess.Popen(argv, stdin=subprocess.DEVNULL,
                                stdout=subprocess.DEVNULL, env=_local_env())
    except OSError as exc:
        raise SpawnError(f"rank {rank}: cannot start {argv[0]!r}: {exc}") from exc


def poll_locks(workdir, nproc, config: LaunchConfig, fail_fast=False) -> None:
    """Block until ``filelock0..filelock<nproc-1>`` are all gone.

    Ranks already seen unlocked are not probed again.  With ``fail_fast``,
    a rank that clears with a ``fail<r>`` marker raises WorkerFailed at once
    instead of waiting for the remaining workers.
    """
    pending = list(range(nproc))
    deadline = None if config.timeout is None else time.monotonic() + config.timeout
    while True:
        still = []
        for rank in pending:
            if protocol.lock_exists(workdir, rank):
                still.append(rank)
            elif fail_fast:
                msg = protocol.read_failure(workdir, rank)
                if msg is not None:
                    raise WorkerFailed([(rank, msg)])
        pending = still
        if not pending:
            return
        if deadline is None:
            time.sleep(config.poll_interval)
            continue
        left = deadline - time.monotonic()
        if left <= 0:
            raise TimeoutExpired(pending, config.timeout)
        time.sleep(min(config.poll_interval, left))


def merge_results(workdir, job: JobSpec) -> MergedResult:
    failures = protocol.check_failures(workdir, job.nproc)
    if failures:
        raise WorkerFailed(failures)
    results = [protocol.read_result(workdir, rank) for rank in range(job.nproc)]
    total = sum(r.value_count for r in results)
    if total != job.grid.point_count:
        raise CountMismatch(f"workers reported {total} values, grid has {job.grid.point_count}")
    if job.store_values:
        for r in results:
            if not r.stored:
                raise CountMismatch(f"rank {r.rank} did not store its values")
        values = np.concatenate([r.values for r in results])
    else:
        values = np.empty(0, dtype=np.float64)
    return MergedResult(values, sum(r.nan_count for r in results), tuple(results))


def compute_timings(wall, master_cpu, worker_results) -> TimingReport:
    if not worker_results:
        raise EmptyResults("no worker results to time")
    total = sum(r.cpu_seconds for r in worker_results)
    return TimingReport(wall, master_cpu, total, total / len(worker_results))


def stage_job(job: JobSpec, config: LaunchConfig) -> list[Path]:
    """Clean the workdir, then create every lock and spec; return spec paths."""
    workdir = config.workdir
    if not workdir.is_dir():
        raise FileNotFoundError(f"work directory {workdir} does not exist")
    protocol.clean_workdir(workdir)
    paths = []
    for part in plan_partitions(job.grid, job.nproc):
        protocol.create_lock(workdir, part.rank)
        paths.append(protocol.write_worker_spec(WorkerSpec(
            rank=part.rank,
            start_index=part.start_index,
            end_index=part.end_index,
            step=job.grid.step,
            expression=job.expression,
            store_values=job.store_values,
            workdir=workdir,
        )))
    return paths


def _reap(handles, grace=5.0):
    deadline = time.monotonic() + grace
    for proc in handles:
        try:
            proc.wait(timeout=max(deadline - time.monotonic(), 0.01))
        except subprocess.TimeoutExpired:
            pass


def execute_job(job: JobSpec, config: LaunchConfig, spec_paths) -> tuple[MergedResult, TimingReport]:
    """Launch staged workers, wait for their locks, merge, and time the run."""
    workdir = config.workdir
    t1 = time.process_time()
    tic = time.perf_counter()
    handles = []
    try:
        for rank, path in enumerate(spec_paths):
            handles.append(launch_worker(rank, path, config))
        poll_locks(workdir, job.nproc, config, fail_fast=True)
    except BaseException:
        for proc in handles:
            if proc.poll() is None and config.launcher_template is None:
                proc.kill()
        _reap(handles, grace=1.0)
        raise
    merged = merge_results(workdir, job)
    elapsed = time.perf_counter() - tic
    master_cpu = time.process_time() - t1
    _reap(handles)
    return merged, compute_timings(elapsed, master_cpu, merged.per_worker)


def run_job(job: JobSpec, config: LaunchConfig) -> tuple[MergedResult, TimingReport]:
    return execute_job(job, config, stage_job(job, config))
