"""Text form of trigonometric polynomials.

An expression is a signed sum of terms. Each term is a number, optionally
times ``cos(2*pi*K.x)`` or ``sin(2*pi*K.x)``, where ``K`` is an integer vector
written ``(k1,...,kn)``. The wave may also be written ``(K.x)`` with extra
parentheses, and the amplitude may be omitted::

    1 + 0.5*cos(2*pi*(1,0).x) - sin(2*pi*((0,2).x))
"""
from __future__ import annotations

import re

from ..errors import DimensionError
from .trigpoly import TrigPoly

_TOKEN = re.compile(r"\s*(?:(?P<num>\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
                    r"|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*(),.]))")


class ExpressionError(ValueError):
    """Malformed expression; ``pos`` is the 0-based character offset."""

    def __init__(self, message: str, text: str, pos: int):
        super().__init__(f"{message} at column {pos + 1}: {text!r}")
        self.pos = pos
        self.text = text


def _tokenize(text):
    out = []
    i = 0
    while i < len(text):
        if text[i].isspace():
            i += 1
            continue
        m = _TOKEN.match(text, i)
        if not m or m.end() == i:
            raise ExpressionError("unexpected character", text, i)
        kind = m.lastgroup
        out.append((kind, m.group(kind), m.start(kind)))
        i = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text, dim):
        self.text = text
        self.dim = dim
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self, value=None, kind=None):
        tok = self.toks[self.i]
        if (value is not None and tok[1] != value) or (kind is not None and tok[0] != kind):
            want = value if value is not None else kind
            raise ExpressionError(f"expected {want!r}, found {tok[1] or 'end of input'!r}", self.text, tok[2])
        self.i += 1
        return tok

    def parse(self):
        terms = []
        sign = 1.0
        tok = self.peek()
        if tok[1] in "+-" and tok[0] == "op":
            self.take()
            sign = -1.0 if tok[1] == "-" else 1.0
        terms.append(self.term(sign))
        while self.peek()[0] == "op" and self.peek()[1] in ("+", "-"):
            sign = -1.0 if self.take()[1] == "-" else 1.0
            terms.append(self.term(sign))
        self.take(kind="end")
        return terms

    def term(self, sign):
        tok = self.peek()
        amp = 1.0
        if tok[0] == "num":
            amp = float(self.take()[1])
            if not (self.peek()[0] == "op" and self.peek()[1] == "*"):
                return ("const", sign * amp, None)
            self.take("*")
        _, name, pos = self.take(kind="name")
        if name not in ("cos", "sin"):
            raise ExpressionError(f"unknown function {name!r}", self.text, pos)
        self.take("(")
        two = self.take(kind="num")
        if float(two[1]) != 2.0:
            raise ExpressionError("wave argument must start with 2*pi", self.text, two[2])
        self.take("*")
        pi = self.take(kind="name")
        if pi[1] != "pi":
            raise ExpressionError("wave argument must start with 2*pi", self.text, pi[2])
        self.take("*")
        k = self.wave()
        self.take(")")
        return (name, sign * amp, k)

    def wave(self):
        # accepts (k).x and ((k).x)
        self.take("(")
        if self.peek()[1] == "(":
            k = self.wave()
            self.take(")")
            return k
        k = [self.integer()]
        while self.peek()[1] == ",":
            self.take(",")
            k.append(self.integer())
        self.take(")")
        self.take(".")
        x = self.take(kind="name")
        if x[1] != "x":
            raise ExpressionError("expected 'x' after frequency vector", self.text, x[2])
        if len(k) != self.dim:
            raise DimensionError(f"frequency vector {tuple(k)} has {len(k)} entries, expected {self.dim}")
        return tuple(k)

    def integer(self):
        neg = False
        if self.peek()[1] in ("-", "+"):
            neg = self.take()[1] == "-"
        tok = self.take(kind="num")
        if not re.fullmatch(r"\d+", tok[1]):
            raise ExpressionError("frequency entries must be integers", self.text, tok[2])
        v = int(tok[1])
        return -v if neg else v


def parse_terms(text: str, dim: int):
    """Parsed terms as ``(kind, amplitude, k)`` triples, in source order."""
    return _Parser(text, dim).parse()


def parse_expression(text: str, dim: int) -> TrigPoly:
    """Build the :class:`TrigPoly` denoted by ``text`` on T^dim."""
    total = TrigPoly.zero(dim)
    for kind, amp, k in parse_terms(text, dim):
        if kind == "const":
            total = total + TrigPoly.constant(dim, amp)
        elif kind == "cos":
            total = total + TrigPoly.cos_mode(k, amp)
        else:
            total = total + TrigPoly.sin_mode(k, amp)
    return total
