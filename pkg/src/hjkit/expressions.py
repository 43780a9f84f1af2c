"""Minimal arithmetic expression grammar for scenario-defined systems.

Supported: + - * / ^ (right-associative power), unary minus, parentheses,
the functions sin, cos, exp, sqrt, the constants pi and e, numeric
literals, and declared variable names. Compiled expressions evaluate on
numpy arrays (broadcasting) as well as scalars.
"""

from __future__ import annotations

import re

import numpy as np

from .errors import ScenarioError


_TOKEN = re.compile(r"\s*(?:(\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?|([A-Za-z_][A-Za-z_0-9]*)|(\*\*|[-+*/^()]))")

_FUNCTIONS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "sqrt": np.sqrt}
_CONSTANTS = {"pi": np.pi, "e": np.e}


class ExpressionError(ScenarioError):
    """Malformed expression or unknown name."""


def _tokenize(src):
    pos = 0
    out = []
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if not m or m.end() == pos:
            if src[pos:].strip():
                raise ExpressionError(f"unexpected character {src[pos]!r} at column {pos + 1}")
            break
        num, name, op = m.groups()
        if num is not None:
            out.append(("num", float(m.group(0))))
        elif name is not None:
            out.append(("name", name))
        else:
            out.append(("op", "^" if op == "**" else op))
        pos = m.end()
    out.append(("end", None))
    return out


class _Parser:
    def __init__(self, tokens, variables):
        self.toks = tokens
        self.i = 0
        self.variables = set(variables)

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect_op(self, op):
        kind, val = self.take()
        if kind != "op" or val != op:
            raise ExpressionError(f"expected {op!r}, found {val!r}")

    def parse(self):
        node = self.sum()
        if self.peek()[0] != "end":
            raise ExpressionError(f"trailing input from token {self.peek()[1]!r}")
        return node

    def sum(self):
        node = self.product()
        while self.peek() == ("op", "+") or self.peek() == ("op", "-"):
            op = self.take()[1]
            node = ("bin", op, node, self.product())
        return node

    def product(self):
        node = self.unary()
        while self.peek() == ("op", "*") or self.peek() == ("op", "/"):
            op = self.take()[1]
            node = ("bin", op, node, self.unary())
        return node

    def unary(self):
        if self.peek() == ("op", "-"):
            self.take()
            return ("neg", self.unary())
        if self.peek() == ("op", "+"):
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek() == ("op", "^"):
            self.take()
            return ("bin", "^", base, self.unary())   # right-associative
        return base

    def atom(self):
        kind, val = self.take()
        if kind == "num":
            return ("num", val)
        if kind == "name":
            if val in _FUNCTIONS:
                self.expect_op("(")
                arg = self.sum()
                self.expect_op(")")
                return ("call", val, arg)
            if val in _CONSTANTS:
                return ("num", _CONSTANTS[val])
            if val in self.variables:
                return ("var", val)
            raise ExpressionError(f"unknown name {val!r} (variables: {sorted(self.variables)})")
        if kind == "op" and val == "(":
            node = self.sum()
            self.expect_op(")")
            return node
        raise ExpressionError(f"unexpected token {val!r}")


def _evaluate(node, env):
    tag = node[0]
    if tag == "num":
        return node[1]
    if tag == "var":
        return env[node[1]]
    if tag == "neg":
        return -_evaluate(node[1], env)
    if tag == "call":
        return _FUNCTIONS[node[1]](_evaluate(node[2], env))
    op = node[1]
    a = _evaluate(node[2], env)
    b = _evaluate(node[3], env)
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        return a / b
    return a ** b


def compile_expression(src, variables):
    """Compile an expression over the named variables into f(**vars)."""
    node = _Parser(_tokenize(str(src)), variables).parse()

    def f(**env):
        missing = set(variables) - env.keys()
        if missing:
            raise ExpressionError(f"missing variables {sorted(missing)}")
        return _evaluate(node, env)

    f.source = str(src)
    return f
