"""Tokenizer, recursive-descent parser, printer and evaluator for the
single-variable arithmetic language used by workers.

Grammar (``^`` is right-associative and binds tighter than unary minus)::

    expr    := term (('+' | '-') term)*
    term    := factor (('*' | '/') factor)*
    factor  := unary
    unary   := '-' unary | power
    power   := primary ('^' factor)?
    primary := number | 'x' | ident '(' expr ')' | '(' expr ')'

An optional ``y =`` prefix is accepted and ignored.
"""
from __future__ import annotations

import math
import re
import time
from dataclasses import dataclass

import numpy as np

from . import kernel
from .errors import ExpressionError, ParseError, UnknownFunction, UnknownVariable
from .nodes import FUNCTIONS, Binary, Call, Constant, Negate, Node, Variable

__all__ = [
    "Token", "tokenize", "parse", "to_text", "eval_scalar", "eval_grid",
    "PAPER_EXPRESSION", "Constant", "Variable", "Negate", "Binary", "Call",
]

PAPER_EXPRESSION = "y = 5432.060708*cos((sin(x^9.876))^-1.2345)"

_SINGLE = {"+": "plus", "-": "minus", "*": "star", "/": "slash",
           "^": "caret", "(": "lparen", ")": "rparen"}
_NUMBER = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")
_ASSIGN = re.compile(r"\s*y\s*=")


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    position: int


def tokenize(source, offset=0):
    tokens = []
    i, n = 0, len(source)
    while i < n:
        ch = source[i]
        if ch.isspace():
            i += 1
            continue
        if ch in _SINGLE:
            tokens.append(Token(_SINGLE[ch], ch, offset + i))
            i += 1
            continue
        m = _NUMBER.match(source, i)
        if m:
            text = m.group()
            if not math.isfinite(float(text)):
                raise ParseError(f"number {text!r} is not finite", offset + i)
            tokens.append(Token("number", text, offset + i))
            i = m.end()
            continue
        m = _IDENT.match(source, i)
        if m:
            text = m.group()
            kind = "variable" if text == "x" else "identifier"
            tokens.append(Token(kind, text, offset + i))
            i = m.end()
            continue
        raise ParseError(f"unexpected character {ch!r}", offset + i)
    return tokens


class _Parser:
    def __init__(self, tokens, end):
        self.tokens = tokens
        self.pos = 0
        self.end = end

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def here(self):
        tok = self.peek()
        return tok.position if tok else self.end

    def take(self, kind):
        tok = self.peek()
        if tok is None or tok.kind != kind:
            found = repr(tok.text) if tok else "end of input"
            raise ParseError(f"expected {kind}, found {found}", self.here())
        self.pos += 1
        return tok

    def accept(self, *kinds):
        tok = self.peek()
        if tok is not None and tok.kind in kinds:
            self.pos += 1
            return tok
        return None

    def expr(self):
        node = self.term()
        while (tok := self.accept("plus", "minus")):
            node = Binary(tok.text, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while (tok := self.accept("star", "slash")):
            node = Binary(tok.text, node, self.unary())
        return node

    def unary(self):
        if self.accept("minus"):
            return Negate(self.unary())
        return self.power()

    def power(self):
        base = self.primary()
        if self.accept("caret"):
            return Binary("^", base, self.unary())
        return base

    def primary(self):
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of input", self.end)
        if tok.kind == "number":
            self.pos += 1
            return Constant(float(tok.text))
        if tok.kind == "variable":
            self.pos += 1
            return Variable()
        if tok.kind == "identifier":
            self.pos += 1
            nxt = self.peek()
            if nxt is None or nxt.kind != "lparen":
                if tok.text in FUNCTIONS:
                    raise ParseError(f"expected '(' after {tok.text}", self.here())
                raise UnknownVariable(f"unknown variable {tok.text!r}", tok.position)
            if tok.text not in FUNCTIONS:
                raise UnknownFunction(f"unknown function {tok.text!r}", tok.position)
            self.pos += 1
            arg = self.expr()
            self.take("rparen")
            return Call(tok.text, arg)
        if tok.kind == "lparen":
            self.pos += 1
            node = self.expr()
            self.take("rparen")
            return node
        raise ParseError(f"unexpected {tok.text!r}", tok.position)


def parse(source: str) -> Node:
    """Parse ``source`` into an expression tree.

    Raises ParseError, UnknownFunction or UnknownVariable; each carries the
    0-based character offset into ``source``.
    """
    try:
        offset = 0
        m = _ASSIGN.match(source)
        if m:
            offset = m.end()
        body = source[offset:]
        if not body.strip():
            raise ParseError("empty expression", len(source))
        parser = _Parser(tokenize(body, offset), len(source))
        tree = parser.expr()
        if parser.peek() is not None:
            raise ParseError(f"unexpected {parser.peek().text!r}", parser.here())
        return tree
    except ExpressionError as exc:  # attach the source for caret diagnostics
        exc.source = source
        raise


def _number_text(value):
    if value.is_integer() and value < 1e16:
        return str(int(value))
    return repr(value)


def to_text(node: Node) -> str:
    """Fully parenthesized canonical text; ``parse`` inverts it exactly."""
    if isinstance(node, Constant):
        return _number_text(node.value)
    if isinstance(node, Variable):
        return "x"
    if isinstance(node, Negate):
        return f"(-{to_text(node.child)})"
    if isinstance(node, Binary):
        return f"({to_text(node.left)}{node.op}{to_text(node.right)})"
    if isinstance(node, Call):
        return f"{node.func}({to_text(node.arg)})"
    raise TypeError(f"not an expression node: {node!r}")


def eval_scalar(node: Node, x: float) -> float:
    """IEEE double evaluation at one point; domain problems give NaN/inf."""
    return kernel.scalar_function(node)(float(x))


def eval_grid(node: Node, points, backend=None):
    """Evaluate at every point.

    Returns ``(values, nan_count, cpu_seconds)``; ``cpu_seconds`` is the
    process CPU time spent inside the evaluation loop only.
    """
    xs = np.ascontiguousarray(points, dtype=np.float64)
    t1 = time.process_time()
    values, nan_count = kernel.evaluate(node, xs, backend)
    t2 = time.process_time() - t1
    return values, nan_count, max(t2, 0.0)
