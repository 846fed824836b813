"""Grid-evaluation backend selection.

The Cython extension ``spmdgrid._ckernel`` is used when it was built; the
pure-Python evaluator is the fallback.  Setting ``SPMDGRID_PURE_PYTHON=1``
forces the fallback.  Both call the same libm routines and return
bitwise-identical values.
"""
import os
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _pykernel
from .nodes import Binary, Call, Constant, Negate, Variable

try:
    from . import _ckernel
except ImportError:  # extension not built
    _ckernel = None

OPCODES = {
    "const": 0, "x": 1, "neg": 2,
    "+": 3, "-": 4, "*": 5, "/": 6, "^": 7,
    "sin": 8, "cos": 9, "tan": 10, "asin": 11, "acos": 12, "atan": 13,
    "exp": 14, "log": 15, "log10": 16, "sqrt": 17, "abs": 18,
}

if _ckernel is not None and os.environ.get("SPMDGRID_PURE_PYTHON", "") in ("", "0"):
    BACKEND = "cython"
else:
    BACKEND = "python"


def available_backends():
    return ("cython", "python") if _ckernel is not None else ("python",)


@dataclass(frozen=True)
class Program:
    """Postfix form of an expression tree."""
    ops: np.ndarray
    consts: np.ndarray
    depth: int


@lru_cache(maxsize=64)
def compile_program(tree):
    ops, consts = [], []
    depth = 0

    def emit(node, height):
        # height: stack size before this node's result is pushed
        nonlocal depth
        if isinstance(node, Constant):
            ops.append(OPCODES["const"])
            consts.append(node.value)
            depth = max(depth, height + 1)
        elif isinstance(node, Variable):
            ops.append(OPCODES["x"])
            depth = max(depth, height + 1)
        elif isinstance(node, Negate):
            emit(node.child, height)
            ops.append(OPCODES["neg"])
        elif isinstance(node, Binary):
            emit(node.left, height)
            emit(node.right, height + 1)
            ops.append(OPCODES[node.op])
        elif isinstance(node, Call):
            emit(node.arg, height)
            ops.append(OPCODES[node.func])
        else:
            raise TypeError(f"not an expression node: {node!r}")

    emit(tree, 0)
    return Program(np.array(ops, dtype=np.intc),
                   np.array(consts, dtype=np.float64), depth)


@lru_cache(maxsize=64)
def _closure(tree):
    return _pykernel.build(tree)


def evaluate(tree, xs, backend=None):
    """Evaluate ``tree`` at each point of ``xs``.

    Returns ``(values, nan_count)`` with ``values`` a float64 array.
    """
    backend = backend or BACKEND
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    if backend == "cython":
        if _ckernel is None:
            raise RuntimeError("compiled kernel is not available")
        prog = compile_program(tree)
        out = np.empty_like(xs)
        nan_count = _ckernel.eval_points(prog.ops, prog.consts, prog.depth, xs, out)
        return out, int(nan_count)
    if backend == "python":
        return _pykernel.eval_points(_closure(tree), xs)
    raise ValueError(f"unknown backend {backend!r}")


def scalar_function(tree):
    """Pure-Python callable for single-point evaluation."""
    return _closure(tree)
