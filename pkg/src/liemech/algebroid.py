"""Lie algebroids in a single chart.

A rank-``p`` algebroid over an ``m``-dimensional base is stored through its
structure functions ``C[a][b][g]`` (coefficient of ``e_g`` in
``[e_a, e_b]``) and anchor ``rho[a][i]`` (component ``i`` of the vector
field ``rho(e_a)``), all expressions in the base coordinates.  Indices are
0-based in code.

Sections of the prolongation are stored by their components in the
basis ``{T_a, V_a}``: ``xi`` along the ``T`` directions and ``V`` along
the ``V`` directions.  The anchored vector field of such a section on the
total space is ``rho[a][i] xi^a d/dx^i + V^a d/dy^a``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Sequence

from .symbolics import (
    ZERO, Expr, SampleDomain, Var, add, as_expr, diff, mul, neg, sub,
    vanishes_sampled,
)

__all__ = [
    "ShapeError", "LieAlgebroid", "Section", "OneForm", "ProlongedSection",
    "IdentityCheck", "ValidationReport", "validate", "d_on_function",
    "d_on_oneform", "hat", "bracket", "contract", "lie_derivative_oneform",
    "complete_lift", "vertical_lift", "euler_section", "anchored_field",
    "apply_field", "prolonged_bracket", "vertical_endomorphism",
    "complete_lift_function", "VALIDATION_THRESHOLD",
]

VALIDATION_THRESHOLD = 1e-8


class ShapeError(ValueError):
    pass


def _exprs(values) -> tuple[Expr, ...]:
    return tuple(as_expr(v) for v in values)


@dataclass(frozen=True)
class LieAlgebroid:
    base_coords: tuple[str, ...]
    fiber_coords: tuple[str, ...]
    structure: tuple[tuple[tuple[Expr, ...], ...], ...]
    anchor: tuple[tuple[Expr, ...], ...]
    name: str = ""

    def __post_init__(self):
        base = tuple(self.base_coords)
        fiber = tuple(self.fiber_coords)
        object.__setattr__(self, "base_coords", base)
        object.__setattr__(self, "fiber_coords", fiber)
        names = base + fiber
        if len(set(names)) != len(names):
            raise ShapeError(f"coordinate names must be distinct: {names}")
        m, p = len(base), len(fiber)
        try:
            C = tuple(tuple(_exprs(row) for row in plane) for plane in self.structure)
            rho = tuple(_exprs(row) for row in self.anchor)
        except TypeError as exc:
            raise ShapeError(str(exc)) from None
        if len(C) != p or any(len(plane) != p or any(len(r) != p for r in plane) for plane in C):
            raise ShapeError(f"structure functions must be {p}x{p}x{p}")
        if len(rho) != p or any(len(r) != m for r in rho):
            raise ShapeError(f"anchor must be {p}x{m}")
        allowed = set(base)
        for e in [c for plane in C for r in plane for c in r] + [r for row in rho for r in row]:
            if not e.free <= allowed:
                raise ShapeError(f"{e} depends on {sorted(e.free - allowed)}; only base coordinates allowed")
        object.__setattr__(self, "structure", C)
        object.__setattr__(self, "anchor", rho)

    @property
    def m(self) -> int:
        return len(self.base_coords)

    @property
    def p(self) -> int:
        return len(self.fiber_coords)

    @property
    def variables(self) -> tuple[str, ...]:
        return self.base_coords + self.fiber_coords

    @property
    def y(self) -> tuple[Var, ...]:
        return tuple(Var(n) for n in self.fiber_coords)

    @classmethod
    def tangent(cls, coords: Sequence[str], fiber: Sequence[str] | None = None,
                name: str = "") -> LieAlgebroid:
        """Tangent bundle of an open set of R^m with the identity anchor."""
        m = len(coords)
        fiber = fiber or [f"y{i + 1}" for i in range(m)]
        C = [[[0] * m for _ in range(m)] for _ in range(m)]
        rho = [[1 if i == a else 0 for i in range(m)] for a in range(m)]
        return cls(tuple(coords), tuple(fiber), C, rho, name)

    @classmethod
    def lie_algebra(cls, constants, fiber: Sequence[str] | None = None,
                    name: str = "") -> LieAlgebroid:
        """A Lie algebra seen as an algebroid over a point; ``constants[a][b][g]``."""
        p = len(constants)
        fiber = fiber or [f"y{i + 1}" for i in range(p)]
        return cls((), tuple(fiber), constants, [[] for _ in range(p)], name)

    def restrict_to_base(self, e: Expr, what: str = "expression") -> Expr:
        e = as_expr(e)
        extra = e.free - set(self.base_coords)
        if extra:
            raise ShapeError(f"{what} {e} must depend on base coordinates only (found {sorted(extra)})")
        return e

    def anchor_apply(self, a: int, f: Expr) -> Expr:
        """``rho(e_a) f``."""
        return add(*(mul(self.anchor[a][i], diff(f, x)) for i, x in enumerate(self.base_coords)))

    def anchor_of(self, X: Sequence[Expr], f: Expr) -> Expr:
        """``rho(X) f`` for components ``X`` (any dependence)."""
        return add(*(mul(X[a], self.anchor_apply(a, f)) for a in range(self.p)))


@dataclass(frozen=True)
class Section:
    components: tuple[Expr, ...]

    def __post_init__(self):
        object.__setattr__(self, "components", _exprs(self.components))

    def __iter__(self):
        return iter(self.components)

    def __len__(self):
        return len(self.components)

    def __getitem__(self, i):
        return self.components[i]


class OneForm(Section):
    """Section of the dual bundle, components ``alpha_a(x)``."""


@dataclass(frozen=True)
class ProlongedSection:
    xi: tuple[Expr, ...]
    V: tuple[Expr, ...]

    def __post_init__(self):
        object.__setattr__(self, "xi", _exprs(self.xi))
        object.__setattr__(self, "V", _exprs(self.V))
        if len(self.xi) != len(self.V):
            raise ShapeError("xi and V must have the same length")

    @property
    def components(self) -> tuple[Expr, ...]:
        return self.xi + self.V

    def __add__(self, other: ProlongedSection) -> ProlongedSection:
        return ProlongedSection(tuple(map(add, self.xi, other.xi)), tuple(map(add, self.V, other.V)))

    def __sub__(self, other: ProlongedSection) -> ProlongedSection:
        return ProlongedSection(tuple(map(sub, self.xi, other.xi)), tuple(map(sub, self.V, other.V)))

    def __neg__(self) -> ProlongedSection:
        return ProlongedSection(tuple(map(neg, self.xi)), tuple(map(neg, self.V)))


def _section(A: LieAlgebroid, X, what="section") -> tuple[Expr, ...]:
    comps = _exprs(X)
    if len(comps) != A.p:
        raise ShapeError(f"{what} needs {A.p} components, got {len(comps)}")
    for c in comps:
        A.restrict_to_base(c, what + " component")
    return comps


# --------------------------------------------------------------------------
# Validation
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class IdentityCheck:
    passed: bool
    residual: float


@dataclass(frozen=True)
class ValidationReport:
    checks: dict[str, IdentityCheck] = field(default_factory=dict)
    threshold: float = VALIDATION_THRESHOLD

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks.values())

    def as_dict(self) -> dict:
        return {name: {"passed": c.passed, "residual": c.residual} for name, c in self.checks.items()}


def antisymmetry_defects(A: LieAlgebroid) -> list[Expr]:
    C, p = A.structure, A.p
    return [add(C[a][b][g], C[b][a][g]) for a in range(p) for b in range(a, p) for g in range(p)]


def anchor_defects(A: LieAlgebroid) -> list[Expr]:
    """``rho_a(rho^i_b) - rho_b(rho^i_a) - rho^i_g C^g_ab`` for all i, a, b."""
    C, rho, p = A.structure, A.anchor, A.p
    out = []
    for a, b in product(range(p), repeat=2):
        for i in range(A.m):
            lhs = sub(A.anchor_apply(a, rho[b][i]), A.anchor_apply(b, rho[a][i]))
            rhs = add(*(mul(rho[g][i], C[a][b][g]) for g in range(p)))
            out.append(sub(lhs, rhs))
    return out


def jacobi_defects(A: LieAlgebroid) -> list[Expr]:
    """Cyclic sums ``rho_a(C^n_bc) + C^u_bc C^n_au`` over (a, b, c), for all n."""
    C, p = A.structure, A.p
    out = []
    for a, b, c in product(range(p), repeat=3):
        for n in range(p):
            terms = []
            for i, j, k in ((a, b, c), (b, c, a), (c, a, b)):
                terms.append(A.anchor_apply(i, C[j][k][n]))
                terms.extend(mul(C[j][k][u], C[i][u][n]) for u in range(p))
            out.append(add(*terms))
    return out


def validate(A: LieAlgebroid, domain: SampleDomain | None = None,
             threshold: float = VALIDATION_THRESHOLD) -> ValidationReport:
    """Check antisymmetry, the anchor-morphism identity and the Jacobi identity."""
    domain = domain or SampleDomain()
    checks = {}
    for name, defects in (("antisymmetry", antisymmetry_defects(A)),
                          ("anchor_morphism", anchor_defects(A)),
                          ("jacobi", jacobi_defects(A))):
        ok, resid = vanishes_sampled(defects, domain, A.base_coords, tol=threshold)
        checks[name] = IdentityCheck(ok, resid)
    return ValidationReport(checks, threshold)


# --------------------------------------------------------------------------
# Exterior calculus on E
# --------------------------------------------------------------------------


def d_on_function(A: LieAlgebroid, f) -> OneForm:
    f = A.restrict_to_base(f, "function")
    return OneForm(tuple(A.anchor_apply(a, f) for a in range(A.p)))


def d_on_oneform(A: LieAlgebroid, alpha) -> tuple[tuple[Expr, ...], ...]:
    """Antisymmetric matrix ``(d alpha)_ab = rho_a(alpha_b) - rho_b(alpha_a) - C^g_ab alpha_g``."""
    al = _section(A, alpha, "one-form")
    C, p = A.structure, A.p
    M = [[ZERO] * p for _ in range(p)]
    for a in range(p):
        for b in range(a + 1, p):
            v = sub(sub(A.anchor_apply(a, al[b]), A.anchor_apply(b, al[a])),
                    add(*(mul(C[a][b][g], al[g]) for g in range(p))))
            M[a][b] = v
            M[b][a] = neg(v)
    return tuple(tuple(r) for r in M)


def hat(A: LieAlgebroid, alpha) -> Expr:
    """Fiber-linear function ``alpha_a(x) y^a``."""
    al = _section(A, alpha, "one-form")
    return add(*(mul(c, y) for c, y in zip(al, A.y)))


def contract(alpha, X) -> Expr:
    return add(*(mul(as_expr(a), as_expr(x)) for a, x in zip(alpha, X)))


def bracket(A: LieAlgebroid, X, Y) -> Section:
    X, Y = _section(A, X), _section(A, Y)
    C, p = A.structure, A.p
    out = []
    for g in range(p):
        alg = add(*(mul(C[a][b][g], X[a], Y[b]) for a in range(p) for b in range(p)))
        out.append(add(alg, A.anchor_of(X, Y[g]), neg(A.anchor_of(Y, X[g]))))
    return Section(tuple(out))


def lie_derivative_oneform(A: LieAlgebroid, X, alpha) -> OneForm:
    """``d_X alpha = i_X d alpha + d i_X alpha``."""
    X = _section(A, X)
    dal = d_on_oneform(A, alpha)
    dix = d_on_function(A, contract(alpha, X))
    return OneForm(tuple(
        add(*(mul(X[a], dal[a][b]) for a in range(A.p)), dix[b]) for b in range(A.p)
    ))


# --------------------------------------------------------------------------
# Prolongation
# --------------------------------------------------------------------------


def complete_lift(A: LieAlgebroid, X) -> ProlongedSection:
    X = _section(A, X)
    C, p, y = A.structure, A.p, A.y
    V = []
    for a in range(p):
        terms = []
        for b in range(p):
            coeff = sub(A.anchor_apply(b, X[a]), add(*(mul(C[g][b][a], X[g]) for g in range(p))))
            terms.append(mul(coeff, y[b]))
        V.append(add(*terms))
    return ProlongedSection(X, tuple(V))


def vertical_lift(A: LieAlgebroid, X) -> ProlongedSection:
    X = _section(A, X)
    return ProlongedSection((ZERO,) * A.p, X)


def euler_section(A: LieAlgebroid) -> ProlongedSection:
    return ProlongedSection((ZERO,) * A.p, A.y)


def anchored_field(A: LieAlgebroid, P: ProlongedSection) -> tuple[tuple[Expr, ...], tuple[Expr, ...]]:
    """Components ``(dx/dt, dy/dt)`` of the vector field on E anchored by ``P``."""
    xdot = tuple(add(*(mul(A.anchor[a][i], P.xi[a]) for a in range(A.p))) for i in range(A.m))
    return xdot, P.V


def apply_field(A: LieAlgebroid, P: ProlongedSection, f) -> Expr:
    f = as_expr(f)
    xdot, ydot = anchored_field(A, P)
    terms = [mul(c, diff(f, v)) for c, v in zip(xdot + ydot, A.variables)]
    return add(*terms)


def prolonged_bracket(A: LieAlgebroid, P: ProlongedSection, Q: ProlongedSection) -> ProlongedSection:
    C, p = A.structure, A.p
    xi = []
    for g in range(p):
        alg = add(*(mul(C[a][b][g], P.xi[a], Q.xi[b]) for a in range(p) for b in range(p)))
        xi.append(add(alg, apply_field(A, P, Q.xi[g]), neg(apply_field(A, Q, P.xi[g]))))
    V = tuple(sub(apply_field(A, P, Q.V[a]), apply_field(A, Q, P.V[a])) for a in range(p))
    return ProlongedSection(tuple(xi), V)


def vertical_endomorphism(P: ProlongedSection) -> ProlongedSection:
    return ProlongedSection((ZERO,) * len(P.xi), P.xi)


def complete_lift_function(A: LieAlgebroid, f) -> Expr:
    """``f^c(a) = rho(a) f``, i.e. ``rho^i_a y^a df/dx^i``."""
    f = A.restrict_to_base(f, "function")
    return A.anchor_of(A.y, f)
