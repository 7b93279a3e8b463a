"""Lagrangian machinery on a Lie algebroid.

For a Lagrangian ``L(x, y)`` this module builds the Poincare forms, the
energy, the fiber Hessian and the Euler-Lagrange vector field.  The
symplectic 2-form is kept through its coefficients in the dual basis
``{T^a, V^a}``::

    omega = B_ab T^a ^ V^b + D_ab T^a ^ T^b

with ``D`` antisymmetric, so that
``omega(X, Y) = B_ab (X_T^a Y_V^b - X_V^b Y_T^a) + 2 D_ab X_T^a Y_T^b``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .algebroid import LieAlgebroid, ProlongedSection, ShapeError
from .symbolics import (
    Const, Expr, ExprError, add, as_expr, compile_exprs, diff, mul, neg, sub,
)

__all__ = [
    "CONDITION_LIMIT", "SingularHessianError", "State", "OmegaCoefficients",
    "LagrangianSystem", "poincare_one_form", "omega", "energy", "hessian",
    "el_field", "el_field_exprs", "regularity", "dynamics_section",
    "omega_matrix", "contract_omega", "energy_differential",
    "el_consistency_residual",
]

CONDITION_LIMIT = 1e12


class SingularHessianError(ArithmeticError):
    def __init__(self, condition: float, state=None):
        super().__init__(f"singular fiber Hessian (condition estimate {condition:.3e})")
        self.condition = condition
        self.state = state


@dataclass(frozen=True)
class State:
    x: tuple[float, ...]
    y: tuple[float, ...]

    def __post_init__(self):
        x = tuple(float(v) for v in self.x)
        y = tuple(float(v) for v in self.y)
        if not all(np.isfinite(x + y)):
            raise ValueError("state entries must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def flat(self) -> np.ndarray:
        return np.array(self.x + self.y)

    @classmethod
    def from_flat(cls, z, m: int) -> State:
        return cls(tuple(z[:m]), tuple(z[m:]))


@dataclass(frozen=True)
class OmegaCoefficients:
    B: tuple[tuple[Expr, ...], ...]
    D: tuple[tuple[Expr, ...], ...]

    def entries(self) -> list[Expr]:
        return [e for row in self.B for e in row] + [e for row in self.D for e in row]


class LagrangianSystem:
    """A Lie algebroid together with a Lagrangian; derived objects are cached."""

    def __init__(self, algebroid: LieAlgebroid, lagrangian, name: str = ""):
        L = as_expr(lagrangian)
        extra = L.free - set(algebroid.variables)
        if extra:
            raise ShapeError(f"Lagrangian uses undeclared variables {sorted(extra)}")
        self.algebroid = algebroid
        self.L = L
        self.name = name

    def __repr__(self):
        return f"LagrangianSystem({self.algebroid.name or 'algebroid'}, L={self.L})"

    @property
    def m(self) -> int:
        return self.algebroid.m

    @property
    def p(self) -> int:
        return self.algebroid.p

    @cached_property
    def theta(self) -> tuple[Expr, ...]:
        return tuple(diff(self.L, y) for y in self.algebroid.fiber_coords)

    @cached_property
    def dL_dx(self) -> tuple[Expr, ...]:
        return tuple(diff(self.L, x) for x in self.algebroid.base_coords)

    @cached_property
    def hessian(self) -> tuple[tuple[Expr, ...], ...]:
        ys = self.algebroid.fiber_coords
        return tuple(tuple(diff(t, y) for y in ys) for t in self.theta)

    @cached_property
    def mixed(self) -> tuple[tuple[Expr, ...], ...]:
        """``mixed[i][a] = d^2 L / dx^i dy^a``."""
        return tuple(tuple(diff(t, x) for t in self.theta) for x in self.algebroid.base_coords)

    @cached_property
    def omega(self) -> OmegaCoefficients:
        A, p = self.algebroid, self.p
        C, rho = A.structure, A.anchor
        D = [[Const(0.0)] * p for _ in range(p)]
        for a in range(p):
            for b in range(a + 1, p):
                struct = add(*(mul(self.theta[g], C[a][b][g]) for g in range(p)))
                anch = sub(
                    add(*(mul(rho[a][i], self.mixed[i][b]) for i in range(A.m))),
                    add(*(mul(rho[b][i], self.mixed[i][a]) for i in range(A.m))),
                )
                v = mul(Const(0.5), sub(struct, anch))
                D[a][b] = v
                D[b][a] = neg(v)
        return OmegaCoefficients(self.hessian, tuple(tuple(r) for r in D))

    @cached_property
    def energy(self) -> Expr:
        return sub(add(*(mul(y, t) for y, t in zip(self.algebroid.y, self.theta))), self.L)

    @cached_property
    def xdot_exprs(self) -> tuple[Expr, ...]:
        A = self.algebroid
        return tuple(add(*(mul(A.anchor[a][i], A.y[a]) for a in range(A.p))) for i in range(A.m))

    @cached_property
    def force_exprs(self) -> tuple[Expr, ...]:
        """Right-hand side ``F_a`` of ``A_ab dy^b/dt = F_a``."""
        A, p = self.algebroid, self.p
        C, rho, y = A.structure, A.anchor, A.y
        out = []
        for a in range(p):
            potential = add(*(mul(rho[a][i], self.dL_dx[i]) for i in range(A.m)))
            gyro = add(*(mul(C[a][b][g], y[b], self.theta[g]) for b in range(p) for g in range(p)))
            transport = add(*(mul(self.mixed[i][a], rho[b][i], y[b])
                              for i in range(A.m) for b in range(p)))
            out.append(sub(sub(potential, gyro), transport))
        return tuple(out)

    @cached_property
    def _compiled(self) -> Callable:
        hess = [e for row in self.hessian for e in row]
        return compile_exprs(self.xdot_exprs + tuple(hess) + self.force_exprs, self.algebroid.variables)

    def _pieces(self, z: Sequence[float]):
        m, p = self.m, self.p
        out = self._compiled(*z)
        xdot = np.array(out[:m])
        H = np.array(out[m:m + p * p]).reshape(p, p)
        F = np.array(out[m + p * p:])
        return xdot, H, F

    def rhs(self, z: Sequence[float], check: bool = False) -> np.ndarray:
        """Euler-Lagrange vector field on the flat state ``z = (x, y)``."""
        xdot, H, F = self._pieces(z)
        if check:
            cond = _condition(H)
            if not cond < CONDITION_LIMIT:
                raise SingularHessianError(cond)
        try:
            ydot = np.linalg.solve(H, F) if self.p else F
        except np.linalg.LinAlgError:
            raise SingularHessianError(float("inf")) from None
        return np.concatenate([xdot, ydot])

    def hessian_at(self, z: Sequence[float]) -> np.ndarray:
        return self._pieces(z)[1]


def _condition(H: np.ndarray) -> float:
    if H.size == 0:
        return 1.0
    with np.errstate(all="ignore"):
        c = float(np.linalg.cond(H))
    return c if np.isfinite(c) else float("inf")


def _flat(sys: LagrangianSystem, state) -> np.ndarray:
    if isinstance(state, State):
        z = state.flat
    else:
        z = np.asarray(state, dtype=float)
    if z.shape != (sys.m + sys.p,):
        raise ShapeError(f"state must have {sys.m + sys.p} entries")
    return z


# operation-level entry points ------------------------------------------------


def poincare_one_form(sys: LagrangianSystem) -> tuple[Expr, ...]:
    return sys.theta


def omega(sys: LagrangianSystem) -> OmegaCoefficients:
    return sys.omega


def energy(sys: LagrangianSystem) -> Expr:
    return sys.energy


def hessian(sys: LagrangianSystem) -> tuple[tuple[Expr, ...], ...]:
    return sys.hessian


def regularity(sys: LagrangianSystem, state) -> tuple[float, bool]:
    cond = _condition(sys.hessian_at(_flat(sys, state)))
    return cond, cond < CONDITION_LIMIT


def el_field(sys: LagrangianSystem) -> Callable[[State], tuple[np.ndarray, np.ndarray]]:
    """Evaluator ``state -> (dx/dt, dy/dt)``; raises on a singular Hessian."""

    def field(state) -> tuple[np.ndarray, np.ndarray]:
        z = _flat(sys, state)
        out = sys.rhs(z, check=True)
        return out[:sys.m], out[sys.m:]

    return field


def el_field_exprs(sys: LagrangianSystem) -> tuple[tuple[Expr, ...], tuple[Expr, ...]]:
    """Symbolic Euler-Lagrange field, available when the Hessian is constant."""
    H = sys.hessian
    if any(e.free for row in H for e in row):
        raise ExprError("symbolic field requires a state-independent Hessian")
    Hn = np.array([[e.value for e in row] for row in H]) if sys.p else np.zeros((0, 0))
    cond = _condition(Hn)
    if not cond < CONDITION_LIMIT:
        raise SingularHessianError(cond)
    inv = np.linalg.inv(Hn)
    ydot = tuple(
        add(*(mul(Const(float(inv[a][b])), sys.force_exprs[b]) for b in range(sys.p) if inv[a][b] != 0.0))
        for a in range(sys.p)
    )
    return sys.xdot_exprs, ydot


def dynamics_section(sys: LagrangianSystem, state) -> ProlongedSection:
    """``Z_L`` at a state: ``T`` components ``y``, ``V`` components frozen to the numeric ``dy/dt``."""
    z = _flat(sys, state)
    ydot = sys.rhs(z, check=True)[sys.m:]
    return ProlongedSection(sys.algebroid.y, tuple(Const(float(v)) for v in ydot))


def omega_matrix(sys: LagrangianSystem, state) -> np.ndarray:
    """Matrix ``W`` with ``omega(X, Y) = X^T W Y`` in the ordered basis ``(T_1..T_p, V_1..V_p)``."""
    z = _flat(sys, state)
    p = sys.p
    f = compile_exprs(tuple(sys.omega.entries()), sys.algebroid.variables)
    vals = np.array(f(*z))
    B = vals[:p * p].reshape(p, p)
    D = vals[p * p:].reshape(p, p)
    return np.block([[2 * D, B], [-B.T, np.zeros((p, p))]])


def contract_omega(W: np.ndarray, vec: np.ndarray) -> np.ndarray:
    """Components of ``i_X omega`` on the basis, for ``X`` given by ``vec``."""
    return vec @ W


def energy_differential(sys: LagrangianSystem, state) -> np.ndarray:
    """``dE_L`` on ``(T_1..T_p, V_1..V_p)``: ``rho^i_a dE/dx^i`` and ``dE/dy^a``."""
    A = sys.algebroid
    z = _flat(sys, state)
    exprs = [A.anchor_apply(a, sys.energy) for a in range(A.p)]
    exprs += [diff(sys.energy, y) for y in A.fiber_coords]
    return np.array(compile_exprs(tuple(exprs), A.variables)(*z))


def el_consistency_residual(sys: LagrangianSystem, state) -> float:
    """Max componentwise gap in ``i_{Z_L} omega_L = d E_L`` at ``state``."""
    z = _flat(sys, state)
    ydot = sys.rhs(z, check=True)[sys.m:]
    vec = np.concatenate([z[sys.m:], ydot])
    lhs = contract_omega(omega_matrix(sys, z), vec)
    rhs = energy_differential(sys, z)
    return float(np.max(np.abs(lhs - rhs), initial=0.0))
