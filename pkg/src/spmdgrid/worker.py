"""Worker process: read a spec, evaluate the assigned slice, persist, unlock."""
from __future__ import annotations

import logging
import os
import traceback
from pathlib import Path

from . import protocol
from .expr import eval_grid, parse
from .grid import index_points
from .protocol import WorkerResult

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1


def _discard(path):
    try:
        os.unlink(path)
    except FileNotFoundError:
        pass


def _fail(workdir, rank, exc):
    """Leave ``fail<rank>`` behind and release the lock.

    If the marker cannot be written the lock stays, so the master's timeout
    is what eventually notices.
    """
    message = f"{type(exc).__name__}: {exc}"
    try:
        _discard(protocol.result_path(workdir, rank))
        protocol.write_failure_marker(workdir, rank, message)
    except OSError:
        log.exception("could not write failure marker for rank %s", rank)
        return EXIT_FAILED
    protocol.remove_lock(workdir, rank)
    return EXIT_FAILED


def run_worker(spec_path) -> int:
    spec_path = Path(spec_path)
    try:
        spec = protocol.read_worker_spec(spec_path)
    except Exception as exc:
        log.error("cannot read spec %s: %s", spec_path, exc)
        rank = protocol.rank_from_name(spec_path)
        workdir = spec_path.parent
        if rank is None or not workdir.is_dir():
            return EXIT_FAILED
        return _fail(workdir, rank, exc)

    workdir, rank = spec.workdir, spec.rank
    try:
        tree = parse(spec.expression)
        points = index_points(spec.start_index, spec.end_index, spec.step)
        values, nan_count, t2 = eval_grid(tree, points)
        result = WorkerResult(
            rank=rank,
            cpu_seconds=t2,
            nan_count=nan_count,
            values=values if spec.store_values else (),
            value_count=len(values),
        )
        _discard(protocol.failure_path(workdir, rank))
        protocol.write_result(workdir, result)
    except Exception as exc:
        log.debug("worker %s failed\n%s", rank, traceback.format_exc())
        return _fail(workdir, rank, exc)

    try:
        protocol.remove_lock(workdir, rank)
    except OSError:
        log.exception("result written but lock for rank %s could not be removed", rank)
        return EXIT_FAILED
    return EXIT_OK
