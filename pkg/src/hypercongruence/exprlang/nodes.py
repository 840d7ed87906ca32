"""Expression trees with structural sharing, evaluation and exact differentiation.

Nodes are interned: two structurally equal trees are the same object, so
derivative and evaluation caches can be keyed by identity.
"""

from __future__ import annotations

import math
import weakref
from typing import Mapping

import numpy as np

UNARY_FUNCS = ("sin", "cos", "sinh", "cosh", "tanh", "exp", "log", "sqrt")
BINARY_OPS = ("add", "sub", "mul", "div")


class EvalError(ArithmeticError):
    """Domain error raised while evaluating an expression."""

    def __init__(self, message, node=None):
        super().__init__(message)
        self.node = node


class Expr:
    """Immutable, interned expression node.

    ``op`` is one of ``const``, ``var``, ``neg``, ``pow``, a name in
    ``UNARY_FUNCS`` or ``BINARY_OPS``.  ``value`` holds the constant, the
    variable name, or the integer exponent of ``pow``.
    """

    __slots__ = ("op", "args", "value", "_hash", "_derivs", "_vars", "__weakref__")

    _table: "weakref.WeakValueDictionary[tuple, Expr]" = weakref.WeakValueDictionary()

    def __new__(cls, op, args=(), value=None):
        key = (op, tuple(id(a) for a in args), value)
        node = cls._table.get(key)
        if node is not None and node.args == tuple(args):
            return node
        node = object.__new__(cls)
        node.op = op
        node.args = tuple(args)
        node.value = value
        node._hash = hash(key)
        node._derivs = {}
        if op == "var":
            node._vars = frozenset((value,))
        else:
            node._vars = frozenset().union(*(a._vars for a in args))
        cls._table[key] = node
        return node

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        return self is other

    def __repr__(self):
        return f"Expr({to_text(self)!r})"

    def __str__(self):
        return to_text(self)

    def __reduce__(self):
        return (Expr, (self.op, self.args, self.value))

    @property
    def is_const(self):
        return self.op == "const"

    def variables(self):
        """Set of variable names occurring in the tree."""
        return set(self._vars)

    def size(self):
        """Number of distinct nodes (shared subtrees counted once)."""
        seen = set()
        stack = [self]
        while stack:
            node = stack.pop()
            if id(node) not in seen:
                seen.add(id(node))
                stack.extend(node.args)
        return len(seen)


# -- constructors with constant folding ------------------------------------

def const(value) -> Expr:
    value = float(value)
    if value == 0.0:
        value = 0.0  # drop the sign of -0.0
    return Expr("const", (), value)


def var(name: str) -> Expr:
    return Expr("var", (), name)


ZERO = const(0.0)
ONE = const(1.0)


def _cval(e):
    return e.value if e.op == "const" else None


def add(a: Expr, b: Expr) -> Expr:
    ca, cb = _cval(a), _cval(b)
    if ca is not None and cb is not None:
        return const(ca + cb)
    if ca == 0.0:
        return b
    if cb == 0.0:
        return a
    if b.op == "neg":
        return sub(a, b.args[0])
    return Expr("add", (a, b))


def sub(a: Expr, b: Expr) -> Expr:
    ca, cb = _cval(a), _cval(b)
    if ca is not None and cb is not None:
        return const(ca - cb)
    if cb == 0.0:
        return a
    if ca == 0.0:
        return neg(b)
    if a is b:
        return ZERO
    if b.op == "neg":
        return add(a, b.args[0])
    return Expr("sub", (a, b))


def neg(a: Expr) -> Expr:
    ca = _cval(a)
    if ca is not None:
        return const(-ca)
    if a.op == "neg":
        return a.args[0]
    if a.op == "mul" and a.args[0].op == "const":
        return mul(const(-a.args[0].value), a.args[1])
    return Expr("neg", (a,))


def mul(a: Expr, b: Expr) -> Expr:
    ca, cb = _cval(a), _cval(b)
    if ca is not None and cb is not None:
        return const(ca * cb)
    if cb is not None:
        a, b, ca, cb = b, a, cb, ca
    if ca is not None:
        if ca == 0.0:
            return ZERO
        if ca == 1.0:
            return b
        if ca == -1.0:
            return neg(b)
        if b.op == "mul" and b.args[0].op == "const":
            return mul(const(ca * b.args[0].value), b.args[1])
        if b.op == "neg":
            return mul(const(-ca), b.args[0])
    if a.op == "neg" and b.op == "neg":
        return mul(a.args[0], b.args[0])
    if a.op == "neg":
        return neg(mul(a.args[0], b))
    if b.op == "neg":
        return neg(mul(a, b.args[0]))
    return Expr("mul", (a, b))


def div(a: Expr, b: Expr) -> Expr:
    ca, cb = _cval(a), _cval(b)
    if cb is not None and cb != 0.0:
        if ca is not None:
            return const(ca / cb)
        return mul(const(1.0 / cb), a)
    if ca == 0.0 and cb is None:
        return ZERO
    return Expr("div", (a, b))


def power(a: Expr, k: int) -> Expr:
    k = int(k)
    ca = _cval(a)
    if k == 0:
        return ONE
    if k == 1:
        return a
    if ca is not None and not (ca == 0.0 and k < 0):
        return const(ca ** k)
    if a.op == "pow":
        return power(a.args[0], a.value * k)
    return Expr("pow", (a,), k)


_FOLD = {
    "sin": math.sin, "cos": math.cos, "sinh": math.sinh, "cosh": math.cosh,
    "tanh": math.tanh, "exp": math.exp, "log": math.log, "sqrt": math.sqrt,
}


def func(name: str, a: Expr) -> Expr:
    if name not in UNARY_FUNCS:
        raise ValueError(f"unknown function {name!r}")
    ca = _cval(a)
    if ca is not None:
        try:
            return const(_FOLD[name](ca))
        except (ValueError, OverflowError):
            pass  # leave symbolic; evaluate() reports the domain error
    return Expr(name, (a,))


# -- differentiation --------------------------------------------------------

def differentiate(e: Expr, name: str) -> Expr:
    """Exact derivative of ``e`` with respect to the variable ``name``."""
    cached = e._derivs.get(name)
    if cached is not None:
        return cached
    if name not in e._vars:
        result = ZERO
    else:
        result = _diff(e, name)
    e._derivs[name] = result
    return result


def _diff(e, x):
    op = e.op
    if op == "var":
        return ONE if e.value == x else ZERO
    if op == "const":
        return ZERO
    if op == "add":
        return add(differentiate(e.args[0], x), differentiate(e.args[1], x))
    if op == "sub":
        return sub(differentiate(e.args[0], x), differentiate(e.args[1], x))
    if op == "neg":
        return neg(differentiate(e.args[0], x))
    if op == "mul":
        a, b = e.args
        return add(mul(differentiate(a, x), b), mul(a, differentiate(b, x)))
    if op == "div":
        a, b = e.args
        da, db = differentiate(a, x), differentiate(b, x)
        return sub(div(da, b), div(mul(a, db), power(b, 2)))
    if op == "pow":
        a = e.args[0]
        k = e.value
        return mul(mul(const(k), power(a, k - 1)), differentiate(a, x))
    a = e.args[0]
    da = differentiate(a, x)
    if op == "sin":
        outer = func("cos", a)
    elif op == "cos":
        outer = neg(func("sin", a))
    elif op == "sinh":
        outer = func("cosh", a)
    elif op == "cosh":
        outer = func("sinh", a)
    elif op == "tanh":
        outer = sub(ONE, power(e, 2))
    elif op == "exp":
        outer = e
    elif op == "log":
        return div(da, a)
    elif op == "sqrt":
        return div(da, mul(const(2.0), e))
    else:  # pragma: no cover
        raise ValueError(f"cannot differentiate op {op!r}")
    return mul(outer, da)


def substitute(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Replace variables by expressions (used to compose charts with maps)."""
    memo: dict[int, Expr] = {}

    def walk(node):
        got = memo.get(id(node))
        if got is not None:
            return got
        if node.op == "var":
            out = mapping.get(node.value, node)
        elif node.op == "const":
            out = node
        else:
            args = [walk(a) for a in node.args]
            out = rebuild(node, args)
        memo[id(node)] = out
        return out

    return walk(e)


def rebuild(node: Expr, args) -> Expr:
    op = node.op
    if op == "add":
        return add(*args)
    if op == "sub":
        return sub(*args)
    if op == "mul":
        return mul(*args)
    if op == "div":
        return div(*args)
    if op == "neg":
        return neg(args[0])
    if op == "pow":
        return power(args[0], node.value)
    return func(op, args[0])


# -- evaluation -------------------------------------------------------------

def evaluate(e: Expr, env: Mapping[str, object]):
    """Evaluate ``e`` with variables bound in ``env`` (floats or arrays)."""
    return evaluate_many([e], env)[0]


def evaluate_many(exprs, env: Mapping[str, object]):
    """Evaluate several expressions sharing one memo of common subtrees."""
    memo: dict[int, object] = {}
    return [_eval(e, env, memo) for e in exprs]


def _eval(root, env, memo):
    # iterative post-order walk; derivative trees get deep
    stack = [(root, False)]
    while stack:
        node, ready = stack.pop()
        if id(node) in memo:
            continue
        if not ready:
            stack.append((node, True))
            for a in node.args:
                if id(a) not in memo:
                    stack.append((a, False))
            continue
        memo[id(node)] = _apply(node, [memo[id(a)] for a in node.args], env)
    return memo[id(root)]


def _any(mask):
    return bool(np.any(mask))


def _apply(node, vals, env):
    op = node.op
    if op == "const":
        return node.value
    if op == "var":
        try:
            return env[node.value]
        except KeyError:
            raise EvalError(f"unbound variable {node.value!r}", node) from None
    if op == "add":
        return vals[0] + vals[1]
    if op == "sub":
        return vals[0] - vals[1]
    if op == "mul":
        return vals[0] * vals[1]
    if op == "neg":
        return -vals[0]
    if op == "div":
        if _any(np.asarray(vals[1]) == 0):
            raise EvalError(f"division by zero in {to_text(node)}", node)
        return vals[0] / vals[1]
    if op == "pow":
        base = vals[0]
        if node.value < 0:
            if _any(np.asarray(base) == 0):
                raise EvalError(f"division by zero in {to_text(node)}", node)
            return 1.0 / base ** (-node.value)
        return base ** node.value
    x = vals[0]
    if op == "log":
        if _any(np.asarray(x) <= 0):
            raise EvalError(f"log of nonpositive value in {to_text(node)}", node)
        return np.log(x)
    if op == "sqrt":
        if _any(np.asarray(x) < 0):
            raise EvalError(f"sqrt of negative value in {to_text(node)}", node)
        return np.sqrt(x)
    with np.errstate(over="raise"):
        try:
            return _NUMPY[op](x)
        except FloatingPointError:
            raise EvalError(f"overflow in {to_text(node)}", node) from None


_NUMPY = {
    "sin": np.sin, "cos": np.cos, "sinh": np.sinh, "cosh": np.cosh,
    "tanh": np.tanh, "exp": np.exp,
}


# -- printing ---------------------------------------------------------------

_PREC = {"add": 1, "sub": 1, "mul": 2, "div": 2, "neg": 3, "pow": 4}
_SYMBOL = {"add": "+", "sub": "-", "mul": "*", "div": "/"}


def _fmt_const(v):
    text = repr(float(v))
    if text.endswith(".0"):
        text = text[:-2]
    return text


def to_text(e: Expr) -> str:
    """Render with minimal parentheses; the parser reads the result back."""
    return _text(e, {})


def _text(e, memo):
    got = memo.get(id(e))
    if got is not None:
        return got[0]
    op = e.op
    if op == "const":
        s = _fmt_const(e.value)
        if e.value < 0 or "inf" in s or "nan" in s:
            s = f"({s})"
        prec = 5
    elif op == "var":
        s, prec = e.value, 5
    elif op in _SYMBOL:
        a, b = e.args
        p = _PREC[op]
        left = _wrap(a, p, memo, strict=False)
        right = _wrap(b, p, memo, strict=True)
        s = f"{left} {_SYMBOL[op]} {right}"
        prec = p
    elif op == "neg":
        s, prec = "-" + _wrap(e.args[0], 3, memo, strict=False), 3
    elif op == "pow":
        s = f"{_wrap(e.args[0], 4, memo, strict=True)}^{e.value}"
        prec = 4
    else:
        s, prec = f"{op}({_text(e.args[0], memo)})", 5
    memo[id(e)] = (s, prec)
    return s


def _wrap(e, parent_prec, memo, strict):
    s = _text(e, memo)
    prec = memo[id(e)][1]
    if prec < parent_prec or (strict and prec == parent_prec):
        return f"({s})"
    return s
