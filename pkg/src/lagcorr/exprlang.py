"""
A small expression language for smooth maps.

Grammar (precedence from loosest to tightest)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' ['-'] INTEGER)*
    atom    := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

Numbers are decimal literals (``3``, ``0.25``) and are stored as exact
rationals.  Names are either declared variables, declared parameters or the
constant ``pi``.  Functions are ``sin``, ``cos``, ``exp``, ``sqrt`` and the
plateau function ``bump``; ``bump_d1``, ``bump_d2``, ... denote its
derivatives and are produced by :func:`differentiate`.

Parameters are bound at evaluation time and are constants for
differentiation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np


class ExprError(Exception):
    pass


class SyntaxError(ExprError):  # noqa: A001 - deliberate, mirrors the grammar vocabulary
    def __init__(self, message, offset):
        super().__init__(f"{message} at byte offset {offset}")
        self.message = message
        self.offset = offset


class UnknownIdentifier(ExprError):
    def __init__(self, name, offset):
        super().__init__(f"unknown identifier {name!r} at byte offset {offset}")
        self.name = name
        self.offset = offset


class EvaluationDomain(ExprError):
    pass


DEFAULT_VARIABLES = ("x1", "x2", "x3", "x4", "y1", "y2", "y3", "y4")
DEFAULT_PARAMETERS = ("r", "s", "c", "d", "t", "n", "ε", "eps")
CONSTANTS = {"pi": math.pi}
FUNCTIONS = ("sin", "cos", "exp", "sqrt", "bump")
MAX_BUMP_ORDER = 6


# ---------------------------------------------------------------------------
# tree

class Expr:
    __slots__ = ()

    def __str__(self):
        return to_string(self)


@dataclass(frozen=True, eq=True)
class Num(Expr):
    value: Fraction


@dataclass(frozen=True, eq=True)
class Sym(Expr):
    name: str


@dataclass(frozen=True, eq=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True, eq=True)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, eq=True)
class Sub(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, eq=True)
class Mul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, eq=True)
class Div(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True, eq=True)
class Pow(Expr):
    base: Expr
    exponent: int


@dataclass(frozen=True, eq=True)
class Call(Expr):
    func: str
    arg: Expr
    order: int = 0  # derivative order, only meaningful for bump


ZERO = Num(Fraction(0))
ONE = Num(Fraction(1))
TWO = Num(Fraction(2))


def num(v) -> Num:
    return Num(Fraction(v))


# ---------------------------------------------------------------------------
# tokenizer / parser

_PUNCT = "+-*/^()"


def _is_name_start(ch):
    return ch.isalpha() or ch == "_"


def _is_name_char(ch):
    return ch.isalnum() or ch == "_"


def _tokenize(text):
    """Yield (kind, value, byte_offset) triples, ending with ('end', None, n)."""
    out = []
    i = 0
    boff = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            boff += len(ch.encode("utf-8"))
            i += 1
            continue
        start_b = boff
        if ch in _PUNCT:
            out.append((ch, ch, start_b))
            i += 1
            boff += 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            while j < n and text[j].isdigit():
                j += 1
            if j < n and text[j] == ".":
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
            lit = text[i:j]
            if not any(c.isdigit() for c in lit):
                raise SyntaxError("malformed number", start_b)
            out.append(("num", Fraction(lit), start_b))
            boff += len(lit.encode("utf-8"))
            i = j
            continue
        if _is_name_start(ch):
            j = i
            while j < n and _is_name_char(text[j]):
                j += 1
            name = text[i:j]
            out.append(("name", name, start_b))
            boff += len(name.encode("utf-8"))
            i = j
            continue
        raise SyntaxError(f"unexpected character {ch!r}", start_b)
    out.append(("end", None, boff))
    return out


class _Parser:
    def __init__(self, text, variables, parameters):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.known = set(variables) | set(parameters) | set(CONSTANTS)

    def peek(self):
        return self.tokens[self.pos]

    def take(self):
        tok = self.tokens[self.pos]
        if tok[0] != "end":
            self.pos += 1
        return tok

    def expect(self, kind):
        tok = self.peek()
        if tok[0] != kind:
            what = "end of input" if tok[0] == "end" else repr(tok[1])
            raise SyntaxError(f"expected {kind!r}, found {what}", tok[2])
        return self.take()

    def parse(self):
        e = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise SyntaxError(f"unexpected {tok[1]!r}", tok[2])
        return e

    def expr(self):
        e = self.term()
        while self.peek()[0] in "+-":
            op = self.take()[0]
            rhs = self.term()
            e = Add(e, rhs) if op == "+" else Sub(e, rhs)
        return e

    def term(self):
        e = self.unary()
        while self.peek()[0] in ("*", "/"):
            op = self.take()[0]
            rhs = self.unary()
            e = Mul(e, rhs) if op == "*" else Div(e, rhs)
        return e

    def unary(self):
        if self.peek()[0] == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        e = self.atom()
        while self.peek()[0] == "^":
            self.take()
            sign = 1
            if self.peek()[0] == "-":
                self.take()
                sign = -1
            tok = self.peek()
            if tok[0] != "num" or tok[1].denominator != 1:
                raise SyntaxError("exponent must be an integer literal", tok[2])
            self.take()
            e = Pow(e, sign * int(tok[1]))
        return e

    def atom(self):
        tok = self.take()
        kind, val, off = tok
        if kind == "num":
            return Num(val)
        if kind == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "name":
            if self.peek()[0] == "(":
                func, order = _function_name(val)
                if func is None:
                    raise UnknownIdentifier(val, off)
                self.take()
                arg = self.expr()
                self.expect(")")
                return Call(func, arg, order)
            if val not in self.known:
                raise UnknownIdentifier(val, off)
            return Sym(val)
        if kind == "end":
            raise SyntaxError("unexpected end of input", off)
        raise SyntaxError(f"unexpected {val!r}", off)


def _function_name(name):
    if name in FUNCTIONS:
        return name, 0
    if name.startswith("bump_d") and name[6:].isdigit():
        k = int(name[6:])
        if 1 <= k <= MAX_BUMP_ORDER:
            return "bump", k
    return None, 0


def parse(text: str, variables=DEFAULT_VARIABLES, parameters=DEFAULT_PARAMETERS) -> Expr:
    """Parse ``text`` into an expression tree."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    p = _Parser(text, variables, parameters)
    try:
        return p.parse()
    except RecursionError:
        raise SyntaxError("expression nested too deeply", p.peek()[2]) from None


# ---------------------------------------------------------------------------
# printing

def _prec(e):
    if isinstance(e, (Add, Sub)):
        return 1
    if isinstance(e, (Mul, Div)):
        return 2
    if isinstance(e, Neg):
        return 3
    if isinstance(e, Pow):
        return 4
    return 5


def _num_str(v: Fraction):
    if v < 0:
        return "(" + "-" + _num_str(-v) + ")"
    if v.denominator == 1:
        return str(v.numerator)
    d = v.denominator
    k2 = k5 = 0
    while d % 2 == 0:
        d //= 2
        k2 += 1
    while d % 5 == 0:
        d //= 5
        k5 += 1
    if d == 1:
        digits = max(k2, k5)
        scaled = v * 10 ** digits
        s = str(scaled.numerator).rjust(digits + 1, "0")
        return s[:-digits] + "." + s[-digits:]
    return f"({v.numerator}/{v.denominator})"


def to_string(e: Expr) -> str:
    if isinstance(e, Num):
        return _num_str(e.value)
    if isinstance(e, Sym):
        return e.name
    if isinstance(e, Call):
        name = e.func if e.order == 0 else f"bump_d{e.order}"
        return f"{name}({to_string(e.arg)})"
    if isinstance(e, Neg):
        inner = to_string(e.arg)
        if _prec(e.arg) < 3:
            inner = f"({inner})"
        return "-" + inner
    if isinstance(e, Pow):
        base = to_string(e.base)
        if _prec(e.base) < 5 or (isinstance(e.base, Num) and e.base.value < 0):
            base = f"({base})"
        return f"{base}^{e.exponent}"
    op = {Add: " + ", Sub: " - ", Mul: "*", Div: "/"}[type(e)]
    p = _prec(e)
    left = to_string(e.left)
    right = to_string(e.right)
    if _prec(e.left) < p:
        left = f"({left})"
    if _prec(e.right) <= p:
        right = f"({right})"
    return left + op + right


# ---------------------------------------------------------------------------
# light simplification through smart constructors

def _isnum(e, v=None):
    return isinstance(e, Num) and (v is None or e.value == v)


def add(a, b):
    if _isnum(a) and _isnum(b):
        return Num(a.value + b.value)
    if _isnum(a, 0):
        return b
    if _isnum(b, 0):
        return a
    if isinstance(b, Neg):
        return sub(a, b.arg)
    return Add(a, b)


def sub(a, b):
    if _isnum(a) and _isnum(b):
        return Num(a.value - b.value)
    if _isnum(b, 0):
        return a
    if _isnum(a, 0):
        return neg(b)
    if isinstance(b, Neg):
        return add(a, b.arg)
    return Sub(a, b)


def neg(a):
    if _isnum(a):
        return Num(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def _split_coeff(e):
    if isinstance(e, Num):
        return e.value, None
    if isinstance(e, Mul) and isinstance(e.left, Num):
        return e.left.value, e.right
    return Fraction(1), e


def mul(a, b):
    if isinstance(a, Neg):
        return neg(mul(a.arg, b))
    if isinstance(b, Neg):
        return neg(mul(a, b.arg))
    ca, ra = _split_coeff(a)
    cb, rb = _split_coeff(b)
    c = ca * cb
    if c == 0:
        return ZERO
    if ra is None and rb is None:
        return Num(c)
    rest = rb if ra is None else ra if rb is None else Mul(ra, rb)
    if c == 1:
        return rest
    if c == -1:
        return Neg(rest)
    return Mul(Num(c), rest)


def div(a, b):
    if _isnum(b) and b.value != 0:
        if _isnum(a):
            return Num(a.value / b.value)
        if b.value == 1:
            return a
    if _isnum(a, 0) and not _isnum(b, 0):
        return ZERO
    return Div(a, b)


def power(a, k: int):
    if k == 0:
        return ONE
    if k == 1:
        return a
    if _isnum(a) and (a.value != 0 or k > 0):
        return Num(a.value ** k)
    return Pow(a, k)


# ---------------------------------------------------------------------------
# differentiation

def simplify(e: Expr) -> Expr:
    """Rebuild ``e`` bottom-up through the folding constructors."""
    return substitute(e, {})


def differentiate(e: Expr, var: str) -> Expr:
    """Exact symbolic derivative of ``e`` with respect to ``var``, lightly simplified."""
    return _diff(simplify(e), var)


def _diff(e, var):
    if isinstance(e, Num):
        return ZERO
    if isinstance(e, Sym):
        return ONE if e.name == var else ZERO
    if isinstance(e, Neg):
        return neg(_diff(e.arg, var))
    if isinstance(e, Add):
        return add(_diff(e.left, var), _diff(e.right, var))
    if isinstance(e, Sub):
        return sub(_diff(e.left, var), _diff(e.right, var))
    if isinstance(e, Mul):
        da = _diff(e.left, var)
        db = _diff(e.right, var)
        return add(mul(da, e.right), mul(e.left, db))
    if isinstance(e, Div):
        da = _diff(e.left, var)
        db = _diff(e.right, var)
        if _isnum(db, 0):
            return div(da, e.right)
        return div(sub(mul(da, e.right), mul(e.left, db)), power(e.right, 2))
    if isinstance(e, Pow):
        du = _diff(e.base, var)
        if _isnum(du, 0):
            return ZERO
        k = e.exponent
        return mul(mul(num(k), power(e.base, k - 1)), du)
    if isinstance(e, Call):
        du = _diff(e.arg, var)
        if _isnum(du, 0):
            return ZERO
        u = e.arg
        if e.func == "sin":
            outer = Call("cos", u)
        elif e.func == "cos":
            outer = neg(Call("sin", u))
        elif e.func == "exp":
            outer = e
        elif e.func == "sqrt":
            outer = div(ONE, mul(TWO, e))
        elif e.func == "bump":
            if e.order >= MAX_BUMP_ORDER:
                raise ExprError("bump derivative order exceeds the supported maximum")
            outer = Call("bump", u, e.order + 1)
        else:  # pragma: no cover
            raise ExprError(f"unknown function {e.func}")
        return mul(outer, du)
    raise TypeError(f"not an expression: {e!r}")


def substitute(e: Expr, mapping: dict) -> Expr:
    """Replace symbols by expressions (simultaneously)."""
    if isinstance(e, Sym):
        return mapping.get(e.name, e)
    if isinstance(e, Num):
        return e
    if isinstance(e, Neg):
        return neg(substitute(e.arg, mapping))
    if isinstance(e, Pow):
        return power(substitute(e.base, mapping), e.exponent)
    if isinstance(e, Call):
        return Call(e.func, substitute(e.arg, mapping), e.order)
    ctor = {Add: add, Sub: sub, Mul: mul, Div: div}[type(e)]
    return ctor(substitute(e.left, mapping), substitute(e.right, mapping))


def symbols(e: Expr) -> set:
    if isinstance(e, Sym):
        return {e.name}
    if isinstance(e, Num):
        return set()
    if isinstance(e, (Neg, Call)):
        return symbols(e.arg)
    if isinstance(e, Pow):
        return symbols(e.base)
    return symbols(e.left) | symbols(e.right)


# ---------------------------------------------------------------------------
# the plateau function and its derivatives

def _series_mul(a, b):
    K = len(a)
    return [sum(a[i] * b[k - i] for i in range(k + 1)) for k in range(K)]


def _series_div(a, b):
    K = len(a)
    q = []
    for k in range(K):
        acc = a[k] - sum(q[i] * b[k - i] for i in range(k))
        q.append(acc / b[0])
    return q


def _series_exp(f):
    K = len(f)
    e = [np.exp(f[0])]
    for k in range(1, K):
        e.append(sum(j * f[j] * e[k - j] for j in range(1, k + 1)) / k)
    return e


def _psi_series(u0, du, K):
    """Taylor coefficients of exp(-1/u) at u0 for u = u0 + du*h, zero for u0 <= 0."""
    ok = u0 > 2e-3
    safe = np.where(ok, u0, 1.0)
    u = [safe, np.full_like(safe, du)] + [np.zeros_like(safe)] * (K - 2)
    one = [np.ones_like(safe)] + [np.zeros_like(safe)] * (K - 1)
    minus_inv = [-c for c in _series_div(one, u[:K])]
    ser = _series_exp(minus_inv)
    return [np.where(ok, c, 0.0) for c in ser]


def bump_value(x, order=0):
    """rho^(order)(x) where rho = 1 on (-1,1), 0 outside (-2,2), smooth."""
    x = np.asarray(x, dtype=float)
    a = np.abs(x)
    K = order + 1 if order >= 1 else 2
    A = _psi_series(2.0 - a, -1.0, K)
    B = _psi_series(a - 1.0, 1.0, K)
    den = [p + q for p, q in zip(A, B)]
    rho = _series_div(A, den)
    val = rho[order] * math.factorial(order)
    if order % 2 == 1:
        val = val * np.sign(x)
    return val


# ---------------------------------------------------------------------------
# evaluation

_NP_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}


def _eval(e, env):
    if isinstance(e, Num):
        return float(e.value)
    if isinstance(e, Sym):
        if e.name in env:
            return env[e.name]
        if e.name in CONSTANTS:
            return CONSTANTS[e.name]
        if e.name == "eps" and "ε" in env:
            return env["ε"]
        if e.name == "ε" and "eps" in env:
            return env["eps"]
        raise EvaluationDomain(f"unbound symbol {e.name!r}")
    if isinstance(e, Neg):
        return -_eval(e.arg, env)
    if isinstance(e, Add):
        return _eval(e.left, env) + _eval(e.right, env)
    if isinstance(e, Sub):
        return _eval(e.left, env) - _eval(e.right, env)
    if isinstance(e, Mul):
        return _eval(e.left, env) * _eval(e.right, env)
    if isinstance(e, Div):
        den = _eval(e.right, env)
        if np.any(np.asarray(den) == 0):
            raise EvaluationDomain(f"division by zero in {to_string(e)}")
        return _eval(e.left, env) / den
    if isinstance(e, Pow):
        b = _eval(e.base, env)
        if e.exponent < 0 and np.any(np.asarray(b) == 0):
            raise EvaluationDomain(f"zero to a negative power in {to_string(e)}")
        return b ** e.exponent if e.exponent >= 0 else 1.0 / b ** (-e.exponent)
    if isinstance(e, Call):
        u = _eval(e.arg, env)
        if e.func == "sqrt":
            if np.any(np.asarray(u) < 0):
                raise EvaluationDomain(f"square root of a negative number in {to_string(e)}")
            return np.sqrt(u)
        if e.func == "bump":
            return bump_value(u, e.order)
        return _NP_FUNCS[e.func](u)
    raise TypeError(f"not an expression: {e!r}")


def evaluate(e: Expr, bindings: dict):
    """Evaluate in IEEE doubles.  Array bindings broadcast; scalars give a float."""
    env = {k: (np.asarray(v, dtype=float) if not np.isscalar(v) else float(v))
           for k, v in bindings.items()}
    with np.errstate(all="ignore"):
        val = _eval(e, env)
    arr = np.asarray(val, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise EvaluationDomain(f"non-finite value of {to_string(e)}")
    if arr.ndim == 0:
        return float(arr)
    return arr
