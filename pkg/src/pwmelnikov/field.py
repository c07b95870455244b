"""Expression trees for plane scalar fields, closed under differentiation.

The grammar is deliberately small: rational/real constants, variables,
+, -, *, nonnegative integer powers, and sin/cos of sub-expressions.
Division and general composition are excluded so that differentiation is
total and exact.  Constants are kept as exact rationals whenever they
parse as such and are promoted to float only at evaluation time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import ParseError

Number = (int, Fraction, float)


def _as_const_value(v):
    if isinstance(v, (int, Fraction)):
        return Fraction(v)
    if isinstance(v, float):
        return v
    raise TypeError(f"not a constant: {v!r}")


class Expression:
    """Base node.  Instances are immutable and safe to share."""

    __slots__ = ()

    # -- algebra ---------------------------------------------------------

    def __add__(self, other):
        return add(self, _lift(other))

    def __radd__(self, other):
        return add(_lift(other), self)

    def __sub__(self, other):
        return sub(self, _lift(other))

    def __rsub__(self, other):
        return sub(_lift(other), self)

    def __mul__(self, other):
        return mul(self, _lift(other))

    def __rmul__(self, other):
        return mul(_lift(other), self)

    def __neg__(self):
        return mul(Const(Fraction(-1)), self)

    def __pow__(self, n):
        return power(self, n)

    # -- interface implemented by the node classes ------------------------

    def evaluate(self, env):
        raise NotImplementedError

    def evaluate_exact(self, env):
        """Evaluate with Fraction arithmetic.  Raises on sin/cos nodes."""
        raise NotImplementedError

    def diff(self, var):
        raise NotImplementedError

    def substitute(self, var, replacement):
        raise NotImplementedError

    def _code(self):
        raise NotImplementedError

    def is_polynomial(self):
        raise NotImplementedError

    @property
    def is_zero(self):
        return isinstance(self, Const) and self.value == 0

    def compile(self, varnames):
        """Build a fast callable with the same operation tree as evaluate()."""
        src = "lambda {}: {}".format(", ".join(varnames), self._code())
        return eval(src, {"_sin": math.sin, "_cos": math.cos})


def _lift(v):
    if isinstance(v, Expression):
        return v
    return Const(_as_const_value(v))


@dataclass(frozen=True, slots=True)
class Const(Expression):
    value: object  # Fraction or float

    def evaluate(self, env):
        return float(self.value)

    def evaluate_exact(self, env):
        if isinstance(self.value, float):
            return Fraction(self.value)
        return self.value

    def diff(self, var):
        return ZERO

    def substitute(self, var, replacement):
        return self

    def _code(self):
        return repr(float(self.value))

    def is_polynomial(self):
        return True


@dataclass(frozen=True, slots=True)
class Var(Expression):
    name: str

    def evaluate(self, env):
        return env[self.name]

    def evaluate_exact(self, env):
        return Fraction(env[self.name])

    def diff(self, var):
        return ONE if self.name == var else ZERO

    def substitute(self, var, replacement):
        return replacement if self.name == var else self

    def _code(self):
        return self.name

    def is_polynomial(self):
        return True


@dataclass(frozen=True, slots=True)
class Add(Expression):
    a: Expression
    b: Expression

    def evaluate(self, env):
        return self.a.evaluate(env) + self.b.evaluate(env)

    def evaluate_exact(self, env):
        return self.a.evaluate_exact(env) + self.b.evaluate_exact(env)

    def diff(self, var):
        return add(self.a.diff(var), self.b.diff(var))

    def substitute(self, var, replacement):
        return add(self.a.substitute(var, replacement), self.b.substitute(var, replacement))

    def _code(self):
        return f"({self.a._code()} + {self.b._code()})"

    def is_polynomial(self):
        return self.a.is_polynomial() and self.b.is_polynomial()


@dataclass(frozen=True, slots=True)
class Sub(Expression):
    a: Expression
    b: Expression

    def evaluate(self, env):
        return self.a.evaluate(env) - self.b.evaluate(env)

    def evaluate_exact(self, env):
        return self.a.evaluate_exact(env) - self.b.evaluate_exact(env)

    def diff(self, var):
        return sub(self.a.diff(var), self.b.diff(var))

    def substitute(self, var, replacement):
        return sub(self.a.substitute(var, replacement), self.b.substitute(var, replacement))

    def _code(self):
        return f"({self.a._code()} - {self.b._code()})"

    def is_polynomial(self):
        return self.a.is_polynomial() and self.b.is_polynomial()


@dataclass(frozen=True, slots=True)
class Mul(Expression):
    a: Expression
    b: Expression

    def evaluate(self, env):
        return self.a.evaluate(env) * self.b.evaluate(env)

    def evaluate_exact(self, env):
        return self.a.evaluate_exact(env) * self.b.evaluate_exact(env)

    def diff(self, var):
        return add(mul(self.a.diff(var), self.b), mul(self.a, self.b.diff(var)))

    def substitute(self, var, replacement):
        return mul(self.a.substitute(var, replacement), self.b.substitute(var, replacement))

    def _code(self):
        return f"({self.a._code()} * {self.b._code()})"

    def is_polynomial(self):
        return self.a.is_polynomial() and self.b.is_polynomial()


@dataclass(frozen=True, slots=True)
class Pow(Expression):
    base: Expression
    exp: int

    def evaluate(self, env):
        return self.base.evaluate(env) ** self.exp

    def evaluate_exact(self, env):
        return self.base.evaluate_exact(env) ** self.exp

    def diff(self, var):
        # d(u^n) = n u^(n-1) u'
        return mul(mul(Const(Fraction(self.exp)), power(self.base, self.exp - 1)),
                   self.base.diff(var))

    def substitute(self, var, replacement):
        return power(self.base.substitute(var, replacement), self.exp)

    def _code(self):
        return f"({self.base._code()} ** {self.exp})"

    def is_polynomial(self):
        return self.base.is_polynomial()


@dataclass(frozen=True, slots=True)
class Sin(Expression):
    arg: Expression

    def evaluate(self, env):
        return math.sin(self.arg.evaluate(env))

    def evaluate_exact(self, env):
        raise ValueError("sin node is not a polynomial; exact evaluation unsupported")

    def diff(self, var):
        return mul(Cos(self.arg), self.arg.diff(var))

    def substitute(self, var, replacement):
        return Sin(self.arg.substitute(var, replacement))

    def _code(self):
        return f"_sin({self.arg._code()})"

    def is_polynomial(self):
        return False


@dataclass(frozen=True, slots=True)
class Cos(Expression):
    arg: Expression

    def evaluate(self, env):
        return math.cos(self.arg.evaluate(env))

    def evaluate_exact(self, env):
        raise ValueError("cos node is not a polynomial; exact evaluation unsupported")

    def diff(self, var):
        return mul(mul(Const(Fraction(-1)), Sin(self.arg)), self.arg.diff(var))

    def substitute(self, var, replacement):
        return Cos(self.arg.substitute(var, replacement))

    def _code(self):
        return f"_cos({self.arg._code()})"

    def is_polynomial(self):
        return False


ZERO = Const(Fraction(0))
ONE = Const(Fraction(1))
X = Var("x")
Y = Var("y")


# -- smart constructors (constant folding only, no other simplification) --

def _both_exact(a, b):
    return (isinstance(a, Const) and isinstance(b, Const)
            and isinstance(a.value, Fraction) and isinstance(b.value, Fraction))


def add(a, b):
    if _both_exact(a, b):
        return Const(a.value + b.value)
    if a.is_zero:
        return b
    if b.is_zero:
        return a
    return Add(a, b)


def sub(a, b):
    if _both_exact(a, b):
        return Const(a.value - b.value)
    if b.is_zero:
        return a
    return Sub(a, b)


def mul(a, b):
    if _both_exact(a, b):
        return Const(a.value * b.value)
    if a.is_zero or b.is_zero:
        return ZERO
    if isinstance(a, Const) and a.value == 1:
        return b
    if isinstance(b, Const) and b.value == 1:
        return a
    return Mul(a, b)


def power(base, n):
    n = int(n)
    if n < 0:
        raise ValueError("only nonnegative integer powers are in the grammar")
    if n == 0:
        return ONE
    if n == 1:
        return base
    if isinstance(base, Const) and isinstance(base.value, Fraction):
        return Const(base.value ** n)
    return Pow(base, n)


# -- parser ---------------------------------------------------------------

_FUNCS = {"sin": Sin, "cos": Cos}


class _Tokenizer:
    def __init__(self, text):
        self.text = text
        self.pos = 0
        self.tokens = []
        self._scan()
        self.i = 0

    def _scan(self):
        text, n = self.text, len(self.text)
        i = 0
        while i < n:
            c = text[i]
            if c.isspace():
                i += 1
                continue
            if c.isdigit() or (c == "." and i + 1 < n and text[i + 1].isdigit()):
                j = i
                while j < n and (text[j].isdigit() or text[j] == "."):
                    j += 1
                self.tokens.append(("num", text[i:j], i))
                i = j
                continue
            if c.isalpha() or c == "_":
                j = i
                while j < n and (text[j].isalnum() or text[j] == "_"):
                    j += 1
                self.tokens.append(("name", text[i:j], i))
                i = j
                continue
            if c in "+-*/^()":
                self.tokens.append((c, c, i))
                i += 1
                continue
            raise ParseError("unexpected character", i, c)
        self.tokens.append(("end", "", n))

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok


class _Parser:
    """Recursive descent over: expr = term (+|- term)*, term = factor ((*|/) factor)*,
    factor = unary ^ int | unary, unary = -unary | atom."""

    def __init__(self, text, varnames):
        self.tz = _Tokenizer(text)
        self.varnames = set(varnames)

    def parse(self):
        e = self.expr()
        kind, val, pos = self.tz.peek()
        if kind != "end":
            raise ParseError("trailing input", pos, val)
        return e

    def expr(self):
        e = self.term()
        while self.tz.peek()[0] in ("+", "-"):
            op = self.tz.next()[0]
            rhs = self.term()
            e = add(e, rhs) if op == "+" else sub(e, rhs)
        return e

    def term(self):
        e = self.factor()
        while self.tz.peek()[0] in ("*", "/"):
            op, _, pos = self.tz.next()
            rhs = self.factor()
            if op == "*":
                e = mul(e, rhs)
            else:
                # division only by a rational constant (multiplication by 1/q)
                if not (isinstance(rhs, Const) and isinstance(rhs.value, Fraction)):
                    raise ParseError("division is only allowed by rational constants",
                                     pos, "/")
                if rhs.value == 0:
                    raise ParseError("division by zero", pos, "/")
                e = mul(e, Const(1 / rhs.value))
        return e

    def factor(self):
        e = self.unary()
        if self.tz.peek()[0] == "^":
            _, _, pos = self.tz.next()
            sign = 1
            if self.tz.peek()[0] == "-":
                self.tz.next()
                sign = -1
            kind, val, p2 = self.tz.next()
            if kind != "num" or "." in val:
                raise ParseError("exponent must be a nonnegative integer", p2, val)
            if sign < 0:
                raise ParseError("negative exponents are not in the grammar", pos, val)
            e = power(e, int(val))
        return e

    def unary(self):
        kind, val, pos = self.tz.peek()
        if kind == "-":
            self.tz.next()
            return mul(Const(Fraction(-1)), self.unary())
        if kind == "+":
            self.tz.next()
            return self.unary()
        return self.atom()

    def atom(self):
        kind, val, pos = self.tz.next()
        if kind == "num":
            try:
                return Const(Fraction(val))
            except ValueError:
                raise ParseError("malformed number", pos, val) from None
        if kind == "name":
            if val in _FUNCS:
                k2, v2, p2 = self.tz.next()
                if k2 != "(":
                    raise ParseError(f"{val} must be followed by a parenthesized argument",
                                     p2, v2)
                arg = self.expr()
                k3, v3, p3 = self.tz.next()
                if k3 != ")":
                    raise ParseError("missing closing parenthesis", p3, v3)
                return _FUNCS[val](arg)
            if val in self.varnames:
                return Var(val)
            raise ParseError("unknown name", pos, val)
        if kind == "(":
            e = self.expr()
            k2, v2, p2 = self.tz.next()
            if k2 != ")":
                raise ParseError("missing closing parenthesis", p2, v2)
            return e
        raise ParseError("expected a value", pos, val)


def parse(text, varnames=("x", "y")):
    """Parse an infix expression over the given variables."""
    return _Parser(text, varnames).parse()


# -- scalar fields --------------------------------------------------------

class ScalarField:
    """An Expression plus cached partial derivatives and a compiled evaluator.

    Immutable after construction; sharing between threads is fine.  Partials
    are cached up to arbitrary order but the analysis only uses total order 3.
    """

    def __init__(self, expr, varnames=("x", "y")):
        if isinstance(expr, str):
            expr = parse(expr, varnames)
        elif not isinstance(expr, Expression):
            expr = _lift(expr)
        self.expr = expr
        self.varnames = tuple(varnames)
        self._fn = expr.compile(self.varnames)
        self._partials = {}

    def __call__(self, *args):
        return self._fn(*args)

    def d(self, var):
        """Partial derivative as a new ScalarField (cached)."""
        f = self._partials.get(var)
        if f is None:
            f = ScalarField(self.expr.diff(var), self.varnames)
            self._partials[var] = f
        return f

    def partial(self, spec):
        """Iterated partial, e.g. partial("xy") = d/dx d/dy."""
        f = self
        for v in spec:
            f = f.d(v)
        return f

    @property
    def is_zero(self):
        return self.expr.is_zero

    def __repr__(self):
        return f"ScalarField({self.expr!r})"


def evaluate(field, point):
    """Evaluate a ScalarField at a plane point (x, y)."""
    return field(*point)


def differentiate(field, axis):
    """Exact partial derivative of a ScalarField along 'x' or 'y'."""
    if axis not in field.varnames:
        raise ValueError(f"unknown axis {axis!r}")
    return field.d(axis)


def zero_field(varnames=("x", "y")):
    return ScalarField(ZERO, varnames)
