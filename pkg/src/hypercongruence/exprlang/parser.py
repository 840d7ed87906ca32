"""Recursive-descent parser for the chart expression language.

Grammar (all binary operators left-associative)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('-' | '+') unary | power
    power  := atom ('^' integer)*
    atom   := number | name | func '(' expr ')' | '(' expr ')'
    integer:= ['-'] digits | '(' ['-'] digits ')'
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from . import nodes
from .nodes import Expr


class LanguageError(ValueError):
    """Base class for expression and scene errors."""


@dataclass(frozen=True)
class Issue:
    kind: str  # "syntax" | "unknown_identifier" | "exponent"
    pos: int
    message: str

    def __str__(self):
        return f"{self.kind} at {self.pos}: {self.message}"


class ParseError(LanguageError):
    """All problems found in one expression; ``issues`` lists them in order."""

    def __init__(self, text, issues):
        self.text = text
        self.issues = list(issues)
        super().__init__("; ".join(str(i) for i in self.issues) + f" in {text!r}")

    @property
    def kinds(self):
        return [i.kind for i in self.issues]


_TOKEN = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()])"
    r")"
)

CONSTANTS = {"pi": math.pi}


def _tokenize(text):
    tokens = []
    issues = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            issues.append(Issue("syntax", pos, f"unexpected character {text[pos]!r}"))
            break
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens, issues


class _Syntax(Exception):
    pass


class _Parser:
    def __init__(self, text, variables):
        self.text = text
        self.vars = set(variables)
        self.tokens, self.issues = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, message, pos=None):
        if pos is None:
            pos = self.peek()[2]
        self.issues.append(Issue("syntax", pos, message))
        raise _Syntax()

    def expect(self, value):
        kind, text, pos = self.peek()
        if text != value or kind != "op":
            found = "end of input" if kind == "end" else repr(text)
            self.fail(f"expected {value!r}, found {found}")
        self.take()

    def parse(self):
        if self.issues:  # tokenizer already failed
            raise _Syntax()
        e = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            self.fail(f"unexpected {text!r}")
        return e

    def expr(self):
        left = self.term()
        while self.peek()[:2] in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            right = self.term()
            left = nodes.add(left, right) if op == "+" else nodes.sub(left, right)
        return left

    def term(self):
        left = self.unary()
        while self.peek()[:2] in (("op", "*"), ("op", "/")):
            op = self.take()[1]
            right = self.unary()
            left = nodes.mul(left, right) if op == "*" else nodes.div(left, right)
        return left

    def unary(self):
        tok = self.peek()
        if tok[:2] == ("op", "-"):
            self.take()
            return nodes.neg(self.unary())
        if tok[:2] == ("op", "+"):
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        while self.peek()[:2] == ("op", "^"):
            self.take()
            base = nodes.power(base, self.integer())
        return base

    def integer(self):
        paren = False
        if self.peek()[:2] == ("op", "("):
            self.take()
            paren = True
        sign = 1
        if self.peek()[:2] == ("op", "-"):
            self.take()
            sign = -1
        kind, text, pos = self.peek()
        if kind != "num":
            self.fail("exponent must be a literal integer")
        self.take()
        if not re.fullmatch(r"\d+", text):
            # keep going so later problems are reported too
            self.issues.append(Issue("exponent", pos, f"non-integer exponent {text!r}"))
            k = 1
        else:
            k = sign * int(text)
        if paren:
            self.expect(")")
        return k

    def atom(self):
        kind, text, pos = self.peek()
        if kind == "num":
            self.take()
            return nodes.const(float(text))
        if kind == "name":
            self.take()
            if text in nodes.UNARY_FUNCS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return nodes.func(text, arg)
            if self.peek()[:2] == ("op", "("):
                self.issues.append(Issue("unknown_identifier", pos, f"unknown function {text!r}"))
                self.take()
                self.expr()
                self.expect(")")
                return nodes.ZERO
            if text in self.vars:
                return nodes.var(text)
            if text in CONSTANTS:
                return nodes.const(CONSTANTS[text])
            self.issues.append(Issue("unknown_identifier", pos, f"unknown identifier {text!r}"))
            return nodes.var(text)
        if (kind, text) == ("op", "("):
            self.take()
            e = self.expr()
            self.expect(")")
            return e
        found = "end of input" if kind == "end" else repr(text)
        self.fail(f"expected an operand, found {found}")


def parse_expr(text: str, variables=()) -> Expr:
    """Parse ``text`` over the chart variables ``variables``.

    Raises :class:`ParseError` listing every issue found; an unknown
    identifier does not stop parsing, so a later syntax error is reported
    alongside it.
    """
    p = _Parser(text, variables)
    try:
        e = p.parse()
    except _Syntax:
        e = None
    if p.issues:
        raise ParseError(text, p.issues)
    return e
