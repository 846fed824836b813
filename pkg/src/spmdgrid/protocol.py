"""On-disk coordination artifacts in the shared work directory.

=========================  =======================================  ===========
file                       meaning                                  written by
=========================  =======================================  ===========
``fileworker<r>.spec``     what rank ``r`` must compute             master
``filelock<r>``            zero bytes; present while ``r`` is busy  master
``out<r>``                 rank ``r``'s result                      worker
``fail<r>``                diagnostic text for a failed worker      worker
=========================  =======================================  ===========

Doubles are written in shortest round-trip form (``repr``), so reading a file
back reproduces every finite value bit for bit; NaN is written as ``nan``.
A worker removes its lock only after ``out<r>`` has been atomically renamed
into place.
"""
from __future__ import annotations

import math
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import MalformedResult, MalformedSpec
from .expr import parse

SPEC_FORMAT_VERSION = 1
RESULT_HEADER = "# spmdresult v1"
SPEC_KEYS = ("format_version", "rank", "start_index", "end_index", "step",
             "expression", "store_values")

_RANKED = re.compile(r"^(fileworker|filelock|out|fail)(\d+)(\.spec)?$")


def spec_path(workdir, rank) -> Path:
    return Path(workdir) / f"fileworker{rank}.spec"


def lock_path(workdir, rank) -> Path:
    return Path(workdir) / f"filelock{rank}"


def result_path(workdir, rank) -> Path:
    return Path(workdir) / f"out{rank}"


def failure_path(workdir, rank) -> Path:
    return Path(workdir) / f"fail{rank}"


def rank_from_name(path) -> Optional[int]:
    """Rank encoded in a protocol file name, or None for other names."""
    m = _RANKED.match(Path(path).name)
    return int(m.group(2)) if m else None


def format_double(v: float) -> str:
    """Shortest text that reads back to the same bits (NaN sign/payload aside)."""
    v = float(v)
    if v != v:
        return "nan"
    if v.is_integer() and abs(v) < 1e16:
        return "-0" if v == 0.0 and math.copysign(1.0, v) < 0 else str(int(v))
    return repr(v)


# -- worker specs --------------------------------------------------------------

@dataclass(frozen=True)
class WorkerSpec:
    rank: int
    start_index: int
    end_index: int
    step: float
    expression: str
    store_values: bool = True
    workdir: Path = field(default=Path("."), compare=True)

    def __post_init__(self):
        if self.rank < 0:
            raise ValueError(f"rank must be >= 0, got {self.rank}")
        if self.start_index < 0 or self.start_index > self.end_index:
            raise ValueError(f"bad index range [{self.start_index}, {self.end_index}]")
        if not (math.isfinite(self.step) and self.step > 0):
            raise ValueError(f"step must be positive and finite, got {self.step!r}")
        if "\n" in self.expression or "\r" in self.expression:
            raise ValueError("expression must be a single line")
        parse(self.expression)
        object.__setattr__(self, "workdir", Path(self.workdir))


def write_worker_spec(spec: WorkerSpec) -> Path:
    path = spec_path(spec.workdir, spec.rank)
    lines = [
        f"format_version={SPEC_FORMAT_VERSION}",
        f"rank={spec.rank}",
        f"start_index={spec.start_index}",
        f"end_index={spec.end_index}",
        f"step={spec.step!r}",
        f"expression={spec.expression}",
        f"store_values={'true' if spec.store_values else 'false'}",
    ]
    path.write_text("\n".join(lines) + "\n")
    return path


def _parse_int(key, text):
    try:
        return int(text)
    except ValueError:
        raise MalformedSpec(f"{key}: not an integer: {text!r}") from None


def read_worker_spec(path) -> WorkerSpec:
    path = Path(path)
    fields = {}
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        if not line.strip():
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise MalformedSpec(f"{path}:{lineno}: expected key=value")
        key = key.strip()
        if key not in SPEC_KEYS:
            raise MalformedSpec(f"{path}:{lineno}: unknown key {key!r}")
        if key in fields:
            raise MalformedSpec(f"{path}:{lineno}: duplicate key {key!r}")
        fields[key] = value if key == "expression" else value.strip()
    missing = [k for k in SPEC_KEYS if k not in fields]
    if missing:
        raise MalformedSpec(f"{path}: missing key(s) {', '.join(missing)}")
    if fields["format_version"] != str(SPEC_FORMAT_VERSION):
        raise MalformedSpec(f"{path}: unsupported format_version {fields['format_version']!r}")
    try:
        step = float(fields["step"])
    except ValueError:
        raise MalformedSpec(f"step: not a number: {fields['step']!r}") from None
    store = fields["store_values"]
    if store not in ("true", "false"):
        raise MalformedSpec(f"store_values must be true or false, got {store!r}")
    try:
        return WorkerSpec(
            rank=_parse_int("rank", fields["rank"]),
            start_index=_parse_int("start_index", fields["start_index"]),
            end_index=_parse_int("end_index", fields["end_index"]),
            step=step,
            expression=fields["expression"],
            store_values=store == "true",
            workdir=path.parent,
        )
    except MalformedSpec:
        raise
    except ValueError as exc:
        # ParseError and friends are ValueErrors too; let them through as-is
        if type(exc) is ValueError:
            raise MalformedSpec(f"{path}: {exc}") from None
        raise


# -- lock files ----------------------------------------------------------------

def create_lock(workdir, rank) -> Path:
    path = lock_path(workdir, rank)
    with open(path, "wb"):
        pass
    return path


def lock_exists(workdir, rank) -> bool:
    return lock_path(workdir, rank).exists()


def remove_lock(workdir, rank) -> None:
    try:
        os.unlink(lock_path(workdir, rank))
    except FileNotFoundError:
        pass


# -- results -------------------------------------------------------------------

@dataclass(eq=False)
class WorkerResult:
    """One worker's output.  ``rank`` is None for a merged job result.

    ``values`` is empty when values were not stored; ``value_count`` is
    reported either way.
    """
    rank: Optional[int]
    cpu_seconds: float
    nan_count: int
    values: np.ndarray
    value_count: int

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.cpu_seconds < 0:
            raise ValueError("cpu_seconds must be >= 0")
        if len(self.values) not in (0, self.value_count):
            raise ValueError(
                f"{len(self.values)} values but value_count={self.value_count}")

    @property
    def stored(self) -> bool:
        return len(self.values) == self.value_count

    def identical(self, other: "WorkerResult") -> bool:
        """Field-wise equality with bitwise comparison of values."""
        return (self.rank == other.rank
                and self.value_count == other.value_count
                and self.nan_count == other.nan_count
                and bitwise_equal(np.array([self.cpu_seconds]), np.array([other.cpu_seconds]))
                and bitwise_equal(self.values, other.values))


def bitwise_equal(a, b) -> bool:
    """True when both arrays hold the same bits, NaNs matched by position."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        return False
    na, nb = np.isnan(a), np.isnan(b)
    if not np.array_equal(na, nb):
        return False
    return np.array_equal(a[~na].view(np.uint64), b[~nb].view(np.uint64))


def dump_result(path, result: WorkerResult, durable=True) -> Path:
    """Write ``result`` to ``path`` via a temporary file and an atomic rename."""
    path = Path(path)
    header = [RESULT_HEADER]
    if result.rank is not None:
        header.append(f"rank={result.rank}")
    header += [f"value_count={result.value_count}",
               f"nan_count={result.nan_count}",
               f"cpu_seconds={format_double(result.cpu_seconds)}"]
    tmp = path.with_name(f".{path.name}.{os.getpid()}.tmp")
    try:
        with open(tmp, "w") as fh:
            fh.write("\n".join(header))
            fh.write("\n")
            if len(result.values):
                fh.write("\n".join(map(format_double, result.values.tolist())))
                fh.write("\n")
            if durable:
                fh.flush()
                os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
    return path


def write_result(workdir, result: WorkerResult, durable=True) -> Path:
    if result.rank is None:
        raise ValueError("worker results need a rank")
    return dump_result(result_path(workdir, result.rank), result, durable)


def load_result(path) -> WorkerResult:
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines or lines[0] != RESULT_HEADER:
        raise MalformedResult(f"{path}: missing {RESULT_HEADER!r} header")
    header = {}
    i = 1
    while i < len(lines) and "=" in lines[i]:
        key, _, value = lines[i].partition("=")
        if key in header:
            raise MalformedResult(f"{path}: duplicate header {key!r}")
        header[key] = value
        i += 1
    try:
        rank = int(header["rank"]) if "rank" in header else None
        value_count = int(header["value_count"])
        nan_count = int(header["nan_count"])
        cpu_seconds = float(header["cpu_seconds"])
    except KeyError as exc:
        raise MalformedResult(f"{path}: missing header {exc.args[0]!r}") from None
    except ValueError as exc:
        raise MalformedResult(f"{path}: bad header value ({exc})") from None
    body = lines[i:]
    if len(body) not in (0, value_count):
        raise MalformedResult(
            f"{path}: {len(body)} value lines but value_count={value_count}")
    try:
        values = np.array([float(s) for s in body], dtype=np.float64)
    except ValueError as exc:
        raise MalformedResult(f"{path}: bad value line ({exc})") from None
    if len(body) and int(np.count_nonzero(np.isnan(values))) != nan_count:
        raise MalformedResult(f"{path}: nan_count does not match stored values")
    if cpu_seconds < 0 or value_count < 0 or nan_count < 0:
        raise MalformedResult(f"{path}: negative header value")
    return WorkerResult(rank, cpu_seconds, nan_count, values, value_count)


def read_result(workdir, rank) -> WorkerResult:
    result = load_result(result_path(workdir, rank))
    if result.rank != rank:
        raise MalformedResult(f"out{rank} claims rank {result.rank}")
    return result


# -- failure markers -----------------------------------------------------------

def write_failure_marker(workdir, rank, message) -> Path:
    path = failure_path(workdir, rank)
    path.write_text(str(message).rstrip("\n") + "\n")
    return path


def read_failure(workdir, rank) -> Optional[str]:
    try:
        return failure_path(workdir, rank).read_text().rstrip("\n")
    except FileNotFoundError:
        return None


def check_failures(workdir, nproc) -> list[tuple[int, str]]:
    found = []
    for rank in range(nproc):
        msg = read_failure(workdir, rank)
        if msg is not None:
            found.append((rank, msg))
    return found


def clean_workdir(workdir) -> list[Path]:
    """Delete stale protocol files (any rank) and leftover temp files."""
    removed = []
    for entry in Path(workdir).iterdir():
        name = entry.name
        if _RANKED.match(name) or (name.startswith(".out") and name.endswith(".tmp")):
            if entry.is_file():
                entry.unlink()
                removed.append(entry)
    return removed
