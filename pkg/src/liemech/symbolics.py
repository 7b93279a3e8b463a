"""Small expression engine for coordinate functions.

Expressions are immutable trees over real constants and named variables.
They can be parsed from text, printed back in the same grammar,
differentiated exactly and compiled to plain Python callables for fast
numerical evaluation.  Identities are decided by sampling rather than by
canonical simplification.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('-' | '+') unary | power
    power  := atom ('^' unary)?
    atom   := number | name '(' expr ')' | name | '(' expr ')'

Exponents must reduce to a real constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "Expr", "Const", "Var", "Add", "Mul", "Neg", "Div", "Pow", "Func",
    "ExprError", "ParseError", "UndeclaredIdentifierError", "DomainError",
    "UndecidableError", "SampleDomain", "ZERO", "ONE", "FUNCTIONS",
    "as_expr", "add", "mul", "neg", "sub", "div", "power", "func", "fold",
    "substitute",
    "parse", "diff", "compile_exprs", "compile_array", "evaluate", "equal_sampled",
    "vanishes_sampled", "sample_points", "evaluate_on_samples",
    "random_polynomial",
]


class ExprError(ValueError):
    pass


class ParseError(ExprError):
    """Malformed expression text.  ``offset`` is the byte offset of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UndeclaredIdentifierError(ParseError):
    def __init__(self, name: str, offset: int):
        super().__init__(f"undeclared identifier {name!r}", offset)
        self.name = name


class DomainError(ArithmeticError):
    """Evaluation left the real domain (log of non-positive, division by zero, ...)."""


class UndecidableError(RuntimeError):
    pass


FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt")


# --------------------------------------------------------------------------
# Nodes
# --------------------------------------------------------------------------


class Expr:
    """Base class of all expression nodes."""

    __slots__ = ()

    @property
    def children(self) -> tuple[Expr, ...]:
        return ()

    @cached_property
    def free(self) -> frozenset[str]:
        out: frozenset[str] = frozenset()
        for c in self.children:
            out |= c.free
        return out

    @cached_property
    def _hash(self) -> int:
        return hash((type(self).__name__, self._key()))

    def _key(self):
        raise NotImplementedError

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if type(self) is not type(other):
            return NotImplemented if not isinstance(other, Expr) else False
        return self._hash == other._hash and self._key() == other._key()

    def is_zero(self) -> bool:
        return isinstance(self, Const) and self.value == 0.0

    def __str__(self) -> str:
        return to_text(self)

    # arithmetic sugar; all routes go through the folding constructors
    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return sub(self, as_expr(other))

    def __rsub__(self, other):
        return sub(as_expr(other), self)

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, exponent):
        if isinstance(exponent, Expr):
            if not isinstance(exponent, Const):
                raise ExprError("exponent must be a real constant")
            exponent = exponent.value
        return power(self, float(exponent))

    def diff(self, var: str) -> Expr:
        return diff(self, var)

    def __call__(self, **bindings: float) -> float:
        return evaluate(self, bindings)


@dataclass(frozen=True, eq=False, repr=True)
class Const(Expr):
    value: float

    def _key(self):
        return self.value


@dataclass(frozen=True, eq=False)
class Var(Expr):
    name: str

    @cached_property
    def free(self) -> frozenset[str]:
        return frozenset((self.name,))

    def _key(self):
        return self.name


@dataclass(frozen=True, eq=False)
class Add(Expr):
    terms: tuple[Expr, ...]

    @property
    def children(self):
        return self.terms

    def _key(self):
        return self.terms


@dataclass(frozen=True, eq=False)
class Mul(Expr):
    factors: tuple[Expr, ...]

    @property
    def children(self):
        return self.factors

    def _key(self):
        return self.factors


@dataclass(frozen=True, eq=False)
class Neg(Expr):
    arg: Expr

    @property
    def children(self):
        return (self.arg,)

    def _key(self):
        return (self.arg,)


@dataclass(frozen=True, eq=False)
class Div(Expr):
    num: Expr
    den: Expr

    @property
    def children(self):
        return (self.num, self.den)

    def _key(self):
        return (self.num, self.den)


@dataclass(frozen=True, eq=False)
class Pow(Expr):
    base: Expr
    exponent: float

    @property
    def children(self):
        return (self.base,)

    def _key(self):
        return (self.base, self.exponent)


@dataclass(frozen=True, eq=False)
class Func(Expr):
    name: str
    arg: Expr

    def __post_init__(self):
        if self.name not in FUNCTIONS:
            raise ExprError(f"unknown function {self.name!r}")

    @property
    def children(self):
        return (self.arg,)

    def _key(self):
        return (self.name, self.arg)


ZERO = Const(0.0)
ONE = Const(1.0)


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, str):
        return parse(value)
    if isinstance(value, (int, float, np.integer, np.floating)):
        return Const(float(value))
    raise TypeError(f"cannot convert {type(value).__name__} to Expr")


# --------------------------------------------------------------------------
# Folding constructors
# --------------------------------------------------------------------------


def _const(value: float) -> Const:
    # normalise -0.0 so structural equality does not depend on the sign of zero
    return Const(value + 0.0)


def add(*terms: Expr) -> Expr:
    flat: list[Expr] = []
    total = 0.0
    for t in terms:
        items = t.terms if isinstance(t, Add) else (t,)
        for s in items:
            if isinstance(s, Const):
                total += s.value
            else:
                flat.append(s)
    if total != 0.0 or not math.isfinite(total):
        flat.append(_const(total))
    if not flat:
        return ZERO
    if len(flat) == 1:
        return flat[0]
    return Add(tuple(flat))


def mul(*factors: Expr) -> Expr:
    flat: list[Expr] = []
    coeff = 1.0
    for f in factors:
        items = f.factors if isinstance(f, Mul) else (f,)
        for s in items:
            while isinstance(s, Neg):
                coeff = -coeff
                s = s.arg
            if isinstance(s, Const):
                coeff *= s.value
            elif isinstance(s, Mul):
                # a Neg(Mul) unwrapped above
                for g in s.factors:
                    if isinstance(g, Const):
                        coeff *= g.value
                    else:
                        flat.append(g)
            else:
                flat.append(s)
    if coeff == 0.0:
        return ZERO
    if not flat:
        return _const(coeff)
    body = flat[0] if len(flat) == 1 else Mul(tuple(flat))
    if coeff == 1.0:
        return body
    if coeff == -1.0:
        return Neg(body)
    return Mul((_const(coeff), *flat))


def neg(e: Expr) -> Expr:
    if isinstance(e, Const):
        return _const(-e.value)
    if isinstance(e, Neg):
        return e.arg
    if isinstance(e, Mul) and isinstance(e.factors[0], Const):
        return mul(_const(-e.factors[0].value), *e.factors[1:])
    return Neg(e)


def sub(a: Expr, b: Expr) -> Expr:
    return add(a, neg(b))


def div(a: Expr, b: Expr) -> Expr:
    if isinstance(b, Const):
        if b.value == 1.0:
            return a
        if b.value == 0.0:
            return Div(a, b)
        if isinstance(a, Const):
            return _const(a.value / b.value)
        if isinstance(a, Mul) and isinstance(a.factors[0], Const):
            return mul(_const(a.factors[0].value / b.value), *a.factors[1:])
    if a.is_zero():
        return ZERO
    return Div(a, b)


def power(base: Expr, exponent: float) -> Expr:
    exponent = float(exponent)
    if exponent == 0.0:
        return ONE
    if exponent == 1.0:
        return base
    if isinstance(base, Const):
        try:
            value = _real_pow(base.value, exponent)
        except DomainError:
            return Pow(base, exponent)
        return _const(value)
    return Pow(base, exponent)


_SCALAR = {
    "sin": math.sin, "cos": math.cos, "tan": math.tan,
    "exp": math.exp, "log": math.log, "sqrt": math.sqrt,
}


def func(name: str, arg: Expr) -> Expr:
    if name not in FUNCTIONS:
        raise ExprError(f"unknown function {name!r}")
    if isinstance(arg, Const):
        try:
            value = _SCALAR[name](arg.value)
        except (ValueError, OverflowError):
            return Func(name, arg)
        return _const(value)
    return Func(name, arg)


def substitute(e: Expr, bindings: Mapping[str, Expr | float]) -> Expr:
    """Replace variables by expressions or numbers, refolding the result."""
    if not (e.free & bindings.keys()):
        return e
    if isinstance(e, Var):
        return as_expr(bindings[e.name])
    if isinstance(e, Add):
        return add(*(substitute(t, bindings) for t in e.terms))
    if isinstance(e, Mul):
        return mul(*(substitute(f, bindings) for f in e.factors))
    if isinstance(e, Neg):
        return neg(substitute(e.arg, bindings))
    if isinstance(e, Div):
        return div(substitute(e.num, bindings), substitute(e.den, bindings))
    if isinstance(e, Pow):
        return power(substitute(e.base, bindings), e.exponent)
    if isinstance(e, Func):
        return func(e.name, substitute(e.arg, bindings))
    raise TypeError(type(e).__name__)


def fold(e: Expr) -> Expr:
    """Rebuild ``e`` bottom-up through the folding constructors."""
    if isinstance(e, (Const, Var)):
        return e
    if isinstance(e, Add):
        return add(*(fold(t) for t in e.terms))
    if isinstance(e, Mul):
        return mul(*(fold(f) for f in e.factors))
    if isinstance(e, Neg):
        return neg(fold(e.arg))
    if isinstance(e, Div):
        return div(fold(e.num), fold(e.den))
    if isinstance(e, Pow):
        return power(fold(e.base), e.exponent)
    if isinstance(e, Func):
        return func(e.name, fold(e.arg))
    raise TypeError(type(e).__name__)


# --------------------------------------------------------------------------
# Differentiation
# --------------------------------------------------------------------------


def diff(e: Expr, var: str) -> Expr:
    """Exact partial derivative of ``e`` with respect to the variable ``var``."""
    if var not in e.free:
        return ZERO
    return _diff(e, var)


def _diff(e: Expr, v: str) -> Expr:
    if v not in e.free:
        return ZERO
    if isinstance(e, Var):
        return ONE
    if isinstance(e, Add):
        return add(*(_diff(t, v) for t in e.terms))
    if isinstance(e, Mul):
        fs = e.factors
        return add(*(
            mul(*fs[:i], _diff(f, v), *fs[i + 1:])
            for i, f in enumerate(fs) if v in f.free
        ))
    if isinstance(e, Neg):
        return neg(_diff(e.arg, v))
    if isinstance(e, Div):
        a, b = e.num, e.den
        if v not in b.free:
            return div(_diff(a, v), b)
        return div(sub(mul(_diff(a, v), b), mul(a, _diff(b, v))), power(b, 2.0))
    if isinstance(e, Pow):
        n = e.exponent
        return mul(_const(n), power(e.base, n - 1.0), _diff(e.base, v))
    if isinstance(e, Func):
        u = e.arg
        du = _diff(u, v)
        name = e.name
        if name == "sin":
            outer = func("cos", u)
        elif name == "cos":
            outer = neg(func("sin", u))
        elif name == "tan":
            outer = div(ONE, power(func("cos", u), 2.0))
        elif name == "exp":
            outer = e
        elif name == "log":
            return div(du, u)
        else:  # sqrt
            return div(du, mul(Const(2.0), e))
        return mul(outer, du)
    raise TypeError(type(e).__name__)


# --------------------------------------------------------------------------
# Parsing and printing
# --------------------------------------------------------------------------


class _Parser:
    def __init__(self, text: str, variables, parameters):
        self.text = text
        self.pos = 0
        self.variables = None if variables is None else set(variables)
        self.parameters = dict(parameters or {})

    def error(self, message: str, pos: int | None = None):
        raise ParseError(message, self.pos if pos is None else pos)

    def skip(self):
        t = self.text
        while self.pos < len(t) and t[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def run(self) -> Expr:
        if not self.peek():
            self.error("empty expression")
        e = self.expr()
        if self.peek():
            self.error(f"unexpected {self.peek()!r}")
        return e

    def expr(self) -> Expr:
        e = self.term()
        while (c := self.peek()) in ("+", "-") and c:
            self.pos += 1
            rhs = self.term()
            e = add(e, rhs) if c == "+" else sub(e, rhs)
        return e

    def term(self) -> Expr:
        e = self.unary()
        while (c := self.peek()) in ("*", "/") and c:
            self.pos += 1
            rhs = self.unary()
            e = mul(e, rhs) if c == "*" else div(e, rhs)
        return e

    def unary(self) -> Expr:
        c = self.peek()
        if c == "-":
            self.pos += 1
            return neg(self.unary())
        if c == "+":
            self.pos += 1
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek() == "^":
            self.pos += 1
            self.skip()
            start = self.pos
            exponent = self.unary()
            if not isinstance(exponent, Const):
                self.error("exponent must be a real constant", start)
            return power(base, exponent.value)
        return base

    def atom(self) -> Expr:
        c = self.peek()
        start = self.pos
        if not c:
            self.error("unexpected end of input")
        if c == "(":
            self.pos += 1
            e = self.expr()
            if self.peek() != ")":
                self.error("expected ')'")
            self.pos += 1
            return e
        if c.isdigit() or c == ".":
            return self.number()
        if c.isalpha() or c == "_":
            t = self.text
            while self.pos < len(t) and (t[self.pos].isalnum() or t[self.pos] == "_"):
                self.pos += 1
            name = t[start:self.pos]
            if self.peek() == "(" and name in FUNCTIONS:
                self.pos += 1
                arg = self.expr()
                if self.peek() != ")":
                    self.error("expected ')'")
                self.pos += 1
                return func(name, arg)
            if name in self.parameters:
                return Const(float(self.parameters[name]))
            if self.variables is not None and name not in self.variables:
                if name in FUNCTIONS:
                    self.error(f"function {name!r} needs an argument", start)
                raise UndeclaredIdentifierError(name, start)
            return Var(name)
        self.error(f"unexpected {c!r}")

    def number(self) -> Expr:
        t = self.text
        start = self.pos
        while self.pos < len(t) and (t[self.pos].isdigit() or t[self.pos] == "."):
            self.pos += 1
        if self.pos < len(t) and t[self.pos] in "eE":
            j = self.pos + 1
            if j < len(t) and t[j] in "+-":
                j += 1
            if j < len(t) and t[j].isdigit():
                while j < len(t) and t[j].isdigit():
                    j += 1
                self.pos = j
        literal = t[start:self.pos]
        try:
            return Const(float(literal))
        except ValueError:
            self.error(f"bad number {literal!r}", start)


def parse(text: str, variables: Iterable[str] | None = None,
          parameters: Mapping[str, float] | None = None) -> Expr:
    """Parse ``text`` into an expression.

    ``variables`` lists the admissible identifiers (``None`` admits any);
    ``parameters`` maps names to real constants substituted while parsing.
    """
    return _Parser(text, variables, parameters).run()


def _num(value: float) -> str:
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


_PREC = {Add: 1, Neg: 2, Mul: 3, Div: 3, Pow: 4}


def _prec(e: Expr) -> int:
    if isinstance(e, Const):
        return 2 if e.value < 0 else 5
    return _PREC.get(type(e), 5)


def to_text(e: Expr) -> str:
    """Print ``e`` in the parser grammar."""

    def wrap(c: Expr, min_prec: int) -> str:
        s = to_text(c)
        return f"({s})" if _prec(c) < min_prec else s

    if isinstance(e, Const):
        if not math.isfinite(e.value):
            raise ExprError(f"cannot print non-finite constant {e.value}")
        return _num(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Add):
        out = wrap(e.terms[0], 1)
        for t in e.terms[1:]:
            if isinstance(t, Neg):
                out += " - " + wrap(t.arg, 2)
            elif isinstance(t, Const) and t.value < 0:
                out += " - " + _num(-t.value)
            else:
                out += " + " + wrap(t, 2)
        return out
    if isinstance(e, Mul):
        return "*".join(wrap(f, 3) for f in e.factors)
    if isinstance(e, Neg):
        return "-" + wrap(e.arg, 3)
    if isinstance(e, Div):
        return wrap(e.num, 3) + "/" + wrap(e.den, 4)
    if isinstance(e, Pow):
        exp = _num(e.exponent)
        if e.exponent < 0:
            exp = f"({exp})"
        return wrap(e.base, 5) + "^" + exp
    if isinstance(e, Func):
        return f"{e.name}({to_text(e.arg)})"
    raise TypeError(type(e).__name__)


# --------------------------------------------------------------------------
# Numerical evaluation
# --------------------------------------------------------------------------


def _real_pow(base: float, exponent: float) -> float:
    if base < 0 and exponent != int(exponent):
        raise DomainError(f"{base}^{exponent} is not real")
    if base == 0 and exponent < 0:
        raise DomainError("division by zero in power")
    try:
        return float(base ** exponent)
    except OverflowError as exc:
        raise DomainError(str(exc)) from None


def _code(e: Expr, names: Mapping[str, str]) -> str:
    if isinstance(e, Const):
        return repr(e.value)
    if isinstance(e, Var):
        return names[e.name]
    if isinstance(e, Add):
        return "(" + " + ".join(_code(t, names) for t in e.terms) + ")"
    if isinstance(e, Mul):
        return "(" + " * ".join(_code(f, names) for f in e.factors) + ")"
    if isinstance(e, Neg):
        return "(-" + _code(e.arg, names) + ")"
    if isinstance(e, Div):
        return "(" + _code(e.num, names) + " / " + _code(e.den, names) + ")"
    if isinstance(e, Pow):
        n = e.exponent
        b = _code(e.base, names)
        if n == 2.0:
            return f"({b} * {b})" if isinstance(e.base, Var) else f"_sq({b})"
        if n == int(n) and n > 0:
            return f"({b} ** {int(n)})"
        return f"_pow({b}, {n!r})"
    if isinstance(e, Func):
        return f"_{e.name}({_code(e.arg, names)})"
    raise TypeError(type(e).__name__)


def _sq(v: float) -> float:
    return v * v


_NAMESPACE = {"_pow": _real_pow, "_sq": _sq, **{f"_{k}": f for k, f in _SCALAR.items()}}


_ARRAY_NAMESPACE = {
    "_pow": lambda b, n: np.power(b, n), "_sq": _sq,
    **{f"_{k}": getattr(np, k) for k in _SCALAR},
}


@lru_cache(maxsize=4096)
def _compile(exprs: tuple[Expr, ...], variables: tuple[str, ...], vectorized: bool = False) -> Callable:
    names = {v: f"_a{i}" for i, v in enumerate(variables)}
    for e in exprs:
        missing = e.free - names.keys()
        if missing:
            raise ExprError(f"unbound variables {sorted(missing)}")
    body = ", ".join(_code(e, names) for e in exprs)
    src = f"def _f({', '.join(names.values())}):\n    return ({body}{',' if len(exprs) == 1 else ''})\n"
    ns = dict(_ARRAY_NAMESPACE if vectorized else _NAMESPACE)
    exec(src, ns)  # noqa: S102 - source is generated from the tree above
    return ns["_f"]


def compile_exprs(exprs: Sequence[Expr], variables: Sequence[str]) -> Callable[..., tuple[float, ...]]:
    """Compile expressions into one callable of positional ``variables``.

    The returned function yields a tuple of floats and raises
    :class:`DomainError` instead of producing non-finite values.
    """
    raw = _compile(tuple(exprs), tuple(variables))
    n = len(exprs)

    def run(*args: float) -> tuple[float, ...]:
        try:
            out = raw(*args)
        except (ValueError, ZeroDivisionError, OverflowError) as exc:
            raise DomainError(str(exc)) from None
        if not all(map(math.isfinite, out)):
            raise DomainError("non-finite value")
        return out

    run.size = n  # type: ignore[attr-defined]
    return run


def compile_array(exprs: Sequence[Expr], variables: Sequence[str]) -> Callable[..., np.ndarray]:
    """Like :func:`compile_exprs` but elementwise over equally shaped arrays.

    Returns an array of shape ``(len(exprs), *shape)``.
    """
    raw = _compile(tuple(exprs), tuple(variables), True)

    def run(*args) -> np.ndarray:
        args = [np.asarray(a, dtype=float) for a in args]
        shape = np.broadcast_shapes(*(a.shape for a in args)) if args else ()
        with np.errstate(all="ignore"):
            out = np.array([np.broadcast_to(v, shape) for v in raw(*args)], dtype=float)
        if not np.all(np.isfinite(out)):
            raise DomainError("non-finite value")
        return out.reshape((len(exprs), *shape))

    return run


def evaluate(e: Expr, bindings: Mapping[str, float]) -> float:
    variables = tuple(sorted(e.free))
    missing = [v for v in variables if v not in bindings]
    if missing:
        raise ExprError(f"unbound variables {missing}")
    return compile_exprs((e,), variables)(*(float(bindings[v]) for v in variables))[0]


# --------------------------------------------------------------------------
# Sampling-based equality
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SampleDomain:
    intervals: Mapping[str, tuple[float, float]] = field(default_factory=dict)
    n: int = 32
    seed: int = 0
    atol: float = 1e-9
    rtol: float = 1e-9
    default_interval: tuple[float, float] = (-2.0, 2.0)

    def __post_init__(self):
        if self.n < 8:
            raise ValueError("sample count must be at least 8")
        for name, (lo, hi) in {**self.intervals, "<default>": self.default_interval}.items():
            if not lo < hi:
                raise ValueError(f"degenerate interval for {name}: [{lo}, {hi}]")

    def interval(self, name: str) -> tuple[float, float]:
        return tuple(self.intervals.get(name, self.default_interval))

    def replace(self, **changes) -> SampleDomain:
        from dataclasses import replace
        return replace(self, **changes)


_RESAMPLE_LIMIT = 3


def sample_points(variables: Sequence[str], domain: SampleDomain,
                  rng: np.random.Generator | None = None, n: int | None = None) -> np.ndarray:
    rng = np.random.default_rng(domain.seed) if rng is None else rng
    n = domain.n if n is None else n
    lo = np.array([domain.interval(v)[0] for v in variables], dtype=float)
    hi = np.array([domain.interval(v)[1] for v in variables], dtype=float)
    return lo + (hi - lo) * rng.random((n, len(variables)))


def evaluate_on_samples(exprs: Sequence[Expr], domain: SampleDomain,
                        variables: Sequence[str] | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate ``exprs`` at the sample points of ``domain``.

    Points where evaluation fails are redrawn up to three times.  Returns
    ``(points, values)`` with shapes ``(n, len(variables))`` and
    ``(n, len(exprs))``.
    """
    if variables is None:
        variables = sorted(set().union(*(e.free for e in exprs))) if exprs else []
    variables = tuple(variables)
    f = compile_exprs(tuple(exprs), variables)
    rng = np.random.default_rng(domain.seed)
    pts = sample_points(variables, domain, rng)
    values = np.empty((len(pts), len(exprs)))
    for j in range(len(pts)):
        for attempt in range(_RESAMPLE_LIMIT + 1):
            try:
                values[j] = f(*pts[j])
                break
            except DomainError as exc:
                if attempt == _RESAMPLE_LIMIT:
                    raise UndecidableError(
                        f"undecidable on domain: {exc} (point {dict(zip(variables, pts[j]))})"
                    ) from None
                pts[j] = sample_points(variables, domain, rng, n=1)[0]
    return pts, values


def equal_sampled(a, b, domain: SampleDomain | None = None,
                  variables: Sequence[str] | None = None) -> tuple[bool, float]:
    """Decide ``a == b`` (elementwise for sequences) by sampling.

    Passes iff ``|a - b| <= atol + rtol * max(|a|, |b|)`` at every sample;
    the maximum absolute residual is returned alongside the verdict.
    """
    domain = domain or SampleDomain()
    left = [as_expr(a)] if not isinstance(a, (list, tuple)) else [as_expr(x) for x in a]
    right = [as_expr(b)] if not isinstance(b, (list, tuple)) else [as_expr(x) for x in b]
    if len(left) != len(right):
        raise ValueError("operands differ in length")
    pairs = [(x, y) for x, y in zip(left, right) if x != y]
    if not pairs:
        return True, 0.0
    exprs = [x for x, _ in pairs] + [y for _, y in pairs]
    _, vals = evaluate_on_samples(exprs, domain, variables)
    k = len(pairs)
    va, vb = vals[:, :k], vals[:, k:]
    resid = np.abs(va - vb)
    bound = domain.atol + domain.rtol * np.maximum(np.abs(va), np.abs(vb))
    return bool(np.all(resid <= bound)), float(resid.max(initial=0.0))


def vanishes_sampled(exprs: Iterable[Expr], domain: SampleDomain | None = None,
                     variables: Sequence[str] | None = None,
                     tol: float | None = None) -> tuple[bool, float]:
    """Check that every expression is identically zero; returns (ok, max |value|)."""
    domain = domain or SampleDomain()
    nonzero = [e for e in exprs if not e.is_zero()]
    if not nonzero:
        return True, 0.0
    _, vals = evaluate_on_samples(nonzero, domain, variables)
    resid = float(np.abs(vals).max(initial=0.0))
    return resid <= (domain.atol if tol is None else tol), resid


def random_polynomial(variables: Sequence[str], degree: int, rng: np.random.Generator,
                      n_terms: int = 4, coeff_scale: float = 1.0) -> Expr:
    """Random polynomial with integer-valued exponents, total degree <= ``degree``."""
    terms = []
    for _ in range(n_terms):
        c = float(np.round(coeff_scale * rng.uniform(-1, 1), 3))
        d = int(rng.integers(0, degree + 1))
        factors: list[Expr] = [Const(c)]
        for _ in range(d):
            if variables:
                factors.append(Var(variables[int(rng.integers(len(variables)))]))
        terms.append(mul(*factors))
    return add(*terms)
