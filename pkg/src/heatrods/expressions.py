"""Small arithmetic grammar for coefficient functions of one variable.

Supported syntax: ``+ - * / ^`` (``^`` is right associative), unary minus,
parentheses, the functions ``exp``, ``sin``, ``cos``, ``sqrt``, numeric
literals, the constants ``pi`` and ``e``, and the variable ``x``.  Anything
else is rejected at parse time.
"""

from __future__ import annotations

import math
import re
from typing import Callable

import numpy as np

_FUNCTIONS = ("exp", "sin", "cos", "sqrt")
_CONSTANTS = {"pi": math.pi, "e": math.e}

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_]\w*)"
    r"|(?P<op>[-+*/^()]))"
)


class ExpressionError(ValueError):
    """Raised when an expression does not conform to the grammar."""


def _tokenize(source: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(source):
        match = _TOKEN_RE.match(source, pos)
        if match is None:
            if source[pos:].strip() == "":
                break
            raise ExpressionError(
                f"unexpected character {source[pos:].lstrip()[0]!r} at position {pos} in {source!r}"
            )
        if match.lastgroup == "num":
            tokens.append(("num", match.group("num"), match.start("num")))
        elif match.lastgroup == "name":
            tokens.append(("name", match.group("name"), match.start("name")))
        else:
            tokens.append(("op", match.group("op"), match.start("op")))
        pos = match.end()
    tokens.append(("end", "", len(source)))
    return tokens


class _Parser:
    """Recursive-descent parser producing a tuple AST."""

    def __init__(self, source: str):
        self.source = source
        self.tokens = _tokenize(source)
        self.index = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.index]

    def advance(self) -> tuple[str, str, int]:
        token = self.tokens[self.index]
        self.index += 1
        return token

    def expect_op(self, op: str) -> None:
        kind, value, pos = self.advance()
        if kind != "op" or value != op:
            raise ExpressionError(f"expected {op!r} at position {pos} in {self.source!r}")

    def parse(self):
        node = self.expr()
        kind, value, pos = self.peek()
        if kind != "end":
            raise ExpressionError(
                f"unexpected token {value!r} at position {pos} in {self.source!r}"
            )
        return node

    def expr(self):
        node = self.term()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "+-":
                self.advance()
                rhs = self.term()
                node = ("add" if value == "+" else "sub", node, rhs)
            else:
                return node

    def term(self):
        node = self.unary()
        while True:
            kind, value, _ = self.peek()
            if kind == "op" and value in "*/":
                self.advance()
                rhs = self.unary()
                node = ("mul" if value == "*" else "div", node, rhs)
            else:
                return node

    def unary(self):
        kind, value, _ = self.peek()
        if kind == "op" and value == "-":
            self.advance()
            return ("neg", self.unary())
        if kind == "op" and value == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        kind, value, _ = self.peek()
        if kind == "op" and value == "^":
            self.advance()
            # right associative; exponent may carry a unary sign
            return ("pow", base, self.unary())
        return base

    def atom(self):
        kind, value, pos = self.advance()
        if kind == "num":
            return ("num", float(value))
        if kind == "name":
            if value == "x":
                return ("var",)
            if value in _CONSTANTS:
                return ("num", _CONSTANTS[value])
            if value in _FUNCTIONS:
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return ("fun", value, arg)
            raise ExpressionError(
                f"unknown name {value!r} at position {pos} in {self.source!r}"
            )
        if kind == "op" and value == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        raise ExpressionError(
            f"unexpected token {value!r} at position {pos} in {self.source!r}"
        )


def parse_expression(source: str):
    """Parse ``source`` and return the AST; raises ExpressionError on bad input."""
    if not isinstance(source, str) or not source.strip():
        raise ExpressionError("expression must be a non-empty string")
    return _Parser(source).parse()


def _num(value: float):
    return ("num", float(value))


def _is_num(node, value=None) -> bool:
    return node[0] == "num" and (value is None or node[1] == value)


def _add(a, b):
    if _is_num(a, 0.0):
        return b
    if _is_num(b, 0.0):
        return a
    if _is_num(a) and _is_num(b):
        return _num(a[1] + b[1])
    return ("add", a, b)


def _sub(a, b):
    if _is_num(b, 0.0):
        return a
    if _is_num(a) and _is_num(b):
        return _num(a[1] - b[1])
    return ("sub", a, b)


def _mul(a, b):
    if _is_num(a, 0.0) or _is_num(b, 0.0):
        return _num(0.0)
    if _is_num(a, 1.0):
        return b
    if _is_num(b, 1.0):
        return a
    if _is_num(a) and _is_num(b):
        return _num(a[1] * b[1])
    return ("mul", a, b)


def _div(a, b):
    if _is_num(a, 0.0):
        return _num(0.0)
    if _is_num(b, 1.0):
        return a
    return ("div", a, b)


def differentiate(node):
    """Symbolic derivative with light constant folding."""
    kind = node[0]
    if kind == "num":
        return _num(0.0)
    if kind == "var":
        return _num(1.0)
    if kind == "neg":
        return ("neg", differentiate(node[1]))
    if kind == "add":
        return _add(differentiate(node[1]), differentiate(node[2]))
    if kind == "sub":
        return _sub(differentiate(node[1]), differentiate(node[2]))
    if kind == "mul":
        a, b = node[1], node[2]
        return _add(_mul(differentiate(a), b), _mul(a, differentiate(b)))
    if kind == "div":
        a, b = node[1], node[2]
        num = _sub(_mul(differentiate(a), b), _mul(a, differentiate(b)))
        return _div(num, ("pow", b, _num(2.0)))
    if kind == "pow":
        base, expo = node[1], node[2]
        if _is_num(expo):
            c = expo[1]
            return _mul(
                _mul(_num(c), ("pow", base, _num(c - 1.0))), differentiate(base)
            )
        # general a^b = exp(b ln a)
        term1 = _mul(differentiate(expo), ("fun", "_log", base))
        term2 = _div(_mul(expo, differentiate(base)), base)
        return _mul(node, _add(term1, term2))
    if kind == "fun":
        name, arg = node[1], node[2]
        darg = differentiate(arg)
        if name == "exp":
            return _mul(node, darg)
        if name == "sin":
            return _mul(("fun", "cos", arg), darg)
        if name == "cos":
            return ("neg", _mul(("fun", "sin", arg), darg))
        if name == "sqrt":
            return _div(darg, _mul(_num(2.0), node))
        if name == "_log":
            return _div(darg, arg)
    raise ExpressionError(f"cannot differentiate node {node!r}")


_NUMPY_FUNS = {"exp": "np.exp", "sin": "np.sin", "cos": "np.cos",
               "sqrt": "np.sqrt", "_log": "np.log"}


def _to_python(node) -> str:
    kind = node[0]
    if kind == "num":
        return repr(node[1])
    if kind == "var":
        return "x"
    if kind == "neg":
        return f"(-{_to_python(node[1])})"
    if kind in ("add", "sub", "mul", "div", "pow"):
        op = {"add": "+", "sub": "-", "mul": "*", "div": "/", "pow": "**"}[kind]
        return f"({_to_python(node[1])}{op}{_to_python(node[2])})"
    if kind == "fun":
        return f"{_NUMPY_FUNS[node[1]]}({_to_python(node[2])})"
    raise ExpressionError(f"cannot serialize node {node!r}")


def compile_expression(source: str) -> Callable:
    """Compile ``source`` into a callable of one scalar or array argument.

    The generated code is synthesized from the validated AST, so only the
    grammar's operations can appear in it.
    """
    node = parse_expression(source)
    return _compile_node(node)


def compile_derivative(source: str) -> Callable:
    return _compile_node(differentiate(parse_expression(source)))


def _compile_node(node) -> Callable:
    code = _to_python(node)
    fn = eval(f"lambda x: {code}", {"np": np, "__builtins__": {}})

    def evaluate(x):
        out = fn(x)
        if isinstance(x, np.ndarray) and np.ndim(out) == 0:
            return np.full(x.shape, float(out))
        return out

    return evaluate
