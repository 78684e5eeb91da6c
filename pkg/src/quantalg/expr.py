"""Exact rational expressions used as ε-subscripts of quantitative equations.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | atom
    atom   := integer | ident | ('max' | 'min') '(' expr (',' expr)* ')' | '(' expr ')'

``1/2`` is therefore a division of two integer literals, which is exact.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z_0-9]*)|(.))")
_FUNCS = {"max": max, "min": min}


class ExprError(ValueError):
    pass


@dataclass(frozen=True)
class Num:
    value: Fraction

    def __str__(self):
        return str(self.value)


@dataclass(frozen=True)
class Name:
    ident: str

    def __str__(self):
        return self.ident


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object

    def __str__(self):
        return f"({self.left} {self.op} {self.right})"


@dataclass(frozen=True)
class Neg:
    arg: object

    def __str__(self):
        return f"-{self.arg}"


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple

    def __str__(self):
        return f"{self.func}({', '.join(map(str, self.args))})"


def _tokenize(text: str) -> list:
    out = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            break
        num, ident, sym = m.groups()
        if num is not None:
            out.append(("num", num))
        elif ident is not None:
            out.append(("id", ident))
        elif sym in "+-*/(),":
            out.append(("sym", sym))
        else:
            raise ExprError(f"unexpected character {sym!r} in expression {text!r}")
        pos = m.end()
    return out


class _Parser:
    def __init__(self, text):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None)

    def take(self, sym=None):
        tok = self.peek()
        if tok[0] is None or (sym is not None and tok != ("sym", sym)):
            raise ExprError(f"expected {sym or 'a token'} in expression {self.text!r}")
        self.i += 1
        return tok

    def expr(self):
        node = self.term()
        while self.peek() in (("sym", "+"), ("sym", "-")):
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek() in (("sym", "*"), ("sym", "/")):
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.peek() == ("sym", "-"):
            self.take()
            return Neg(self.unary())
        return self.atom()

    def atom(self):
        kind, val = self.take()
        if kind == "num":
            return Num(Fraction(int(val)))
        if kind == "id":
            if val in _FUNCS and self.peek() == ("sym", "("):
                self.take("(")
                args = [self.expr()]
                while self.peek() == ("sym", ","):
                    self.take()
                    args.append(self.expr())
                self.take(")")
                return Call(val, tuple(args))
            return Name(val)
        if (kind, val) == ("sym", "("):
            node = self.expr()
            self.take(")")
            return node
        raise ExprError(f"unexpected {val!r} in expression {self.text!r}")


def parse_expr(text: str):
    p = _Parser(text)
    if not p.toks:
        raise ExprError("empty expression")
    node = p.expr()
    if p.i != len(p.toks):
        raise ExprError(f"trailing input in expression {text!r}")
    return node


def evaluate(node, env: dict) -> Fraction:
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Name):
        try:
            return Fraction(env[node.ident])
        except KeyError:
            raise ExprError(f"unbound name {node.ident!r}") from None
    if isinstance(node, Neg):
        return -evaluate(node.arg, env)
    if isinstance(node, Call):
        return _FUNCS[node.func](evaluate(a, env) for a in node.args)
    a, b = evaluate(node.left, env), evaluate(node.right, env)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    if b == 0:
        raise ZeroDivisionError(f"division by zero in {node}")
    return a / b


def free_names(node) -> set:
    if isinstance(node, Num):
        return set()
    if isinstance(node, Name):
        return {node.ident}
    if isinstance(node, Neg):
        return free_names(node.arg)
    if isinstance(node, Call):
        return set().union(*(free_names(a) for a in node.args))
    return free_names(node.left) | free_names(node.right)
