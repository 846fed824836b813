"""Pure-Python evaluation backend.

The :mod:`math` functions call the platform libm, exactly like the compiled
kernel, but they raise where C quietly returns NaN or an infinity.  The
wrappers below restore the C99 Annex F results so both backends agree bit
for bit.
"""
import math

import numpy as np

from .nodes import Binary, Call, Constant, Negate, Variable

INF = math.inf
NAN = math.nan


def _is_odd_integer(y):
    return y.is_integer() and math.fmod(y, 2.0) != 0.0


def ieee_pow(a, b):
    try:
        return math.pow(a, b)
    except ValueError:
        if a == 0.0:
            # pow(+-0, y<0): +-inf for odd integer y, else +inf
            if _is_odd_integer(b):
                return math.copysign(INF, a)
            return INF
        return NAN
    except OverflowError:
        if a < 0.0 and _is_odd_integer(b):
            return -INF
        return INF


def ieee_div(a, b):
    try:
        return a / b
    except ZeroDivisionError:
        if a != a or a == 0.0:
            return NAN
        return math.copysign(INF, a) * math.copysign(1.0, b)


def _guard(func, at_zero=NAN):
    def wrapped(x):
        try:
            return func(x)
        except ValueError:
            return at_zero if x == 0.0 else NAN
        except OverflowError:
            return INF
    wrapped.__name__ = func.__name__
    return wrapped


UNARY = {
    "sin": _guard(math.sin),
    "cos": _guard(math.cos),
    "tan": _guard(math.tan),
    "asin": _guard(math.asin),
    "acos": _guard(math.acos),
    "atan": math.atan,
    "exp": _guard(math.exp),
    "log": _guard(math.log, at_zero=-INF),
    "log10": _guard(math.log10, at_zero=-INF),
    "sqrt": _guard(math.sqrt),
    "abs": math.fabs,
}


def _add(a, b):
    return a + b


def _sub(a, b):
    return a - b


def _mul(a, b):
    return a * b


BINARY = {"+": _add, "-": _sub, "*": _mul, "/": ieee_div, "^": ieee_pow}


def build(node):
    """Compile a tree into a closure ``f(x) -> float``."""
    if isinstance(node, Constant):
        value = node.value
        return lambda x: value
    if isinstance(node, Variable):
        return lambda x: x
    if isinstance(node, Negate):
        child = build(node.child)
        return lambda x: -child(x)
    if isinstance(node, Binary):
        op = BINARY[node.op]
        left, right = build(node.left), build(node.right)
        return lambda x: op(left(x), right(x))
    if isinstance(node, Call):
        fn = UNARY[node.func]
        arg = build(node.arg)
        return lambda x: fn(arg(x))
    raise TypeError(f"not an expression node: {node!r}")


def eval_points(func, xs):
    """Evaluate ``func`` over ``xs``; return ``(values, nan_count)``."""
    values = [func(x) for x in xs.tolist()]
    out = np.array(values, dtype=np.float64)
    return out, int(np.count_nonzero(np.isnan(out)))
