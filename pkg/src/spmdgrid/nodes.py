"""Immutable expression tree nodes.

Nodes are frozen dataclasses, so structural equality is plain ``==`` and
trees can be used as cache keys.  Constants are finite and non-negative;
a leading minus is always an explicit :class:`Negate` node, which keeps the
printed form and the parsed form in one-to-one correspondence.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

FUNCTIONS = ("sin", "cos", "tan", "asin", "acos", "atan",
             "exp", "log", "log10", "sqrt", "abs")
OPERATORS = ("+", "-", "*", "/", "^")


@dataclass(frozen=True)
class Constant:
    value: float

    def __post_init__(self):
        v = float(self.value)
        if not math.isfinite(v) or math.copysign(1.0, v) < 0:
            raise ValueError(f"constant must be finite and non-negative, got {v!r}")
        object.__setattr__(self, "value", v)


@dataclass(frozen=True)
class Variable:
    name: str = "x"


@dataclass(frozen=True)
class Negate:
    child: Node


@dataclass(frozen=True)
class Binary:
    op: str
    left: Node
    right: Node

    def __post_init__(self):
        if self.op not in OPERATORS:
            raise ValueError(f"unknown operator {self.op!r}")


@dataclass(frozen=True)
class Call:
    func: str
    arg: Node

    def __post_init__(self):
        if self.func not in FUNCTIONS:
            raise ValueError(f"unsupported function {self.func!r}")


Node = Union[Constant, Variable, Negate, Binary, Call]


def walk(node):
    """Yield every node of the tree in pre-order."""
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        if isinstance(n, Negate):
            stack.append(n.child)
        elif isinstance(n, Binary):
            stack.extend((n.right, n.left))
        elif isinstance(n, Call):
            stack.append(n.arg)
