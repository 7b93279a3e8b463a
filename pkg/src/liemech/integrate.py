"""Fixed-step RK4 flows and conserved-quantity monitoring."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Protocol, Sequence

import numpy as np

from .algebroid import LieAlgebroid, ProlongedSection, anchored_field
from .dynamics import CONDITION_LIMIT, LagrangianSystem, SingularHessianError, State, _condition, _flat
from .symbolics import DomainError, Expr, compile_array, compile_exprs

__all__ = [
    "Trajectory", "QuantityDrift", "DriftReport", "SimulationAborted",
    "MonitorGroup", "rk4_step", "simulate", "flow_points", "flow_on_E", "drift",
]


class SimulationAborted(RuntimeError):
    """Integration stopped early; ``trajectory`` holds the accepted steps."""

    def __init__(self, message: str, trajectory: Trajectory, cause: Exception | None = None):
        super().__init__(message)
        self.trajectory = trajectory
        self.cause = cause


class MonitorGroup(Protocol):
    names: Sequence[str]

    def __call__(self, x: np.ndarray, y: np.ndarray) -> Sequence[float]: ...


@dataclass
class Trajectory:
    times: np.ndarray
    x: np.ndarray
    y: np.ndarray
    monitors: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.times)
        if len(self.x) != n or len(self.y) != n or any(len(v) != n for v in self.monitors.values()):
            raise ValueError("trajectory columns must have equal length")
        if n > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")

    def __len__(self):
        return len(self.times)

    @property
    def states(self) -> list[State]:
        return [State(tuple(a), tuple(b)) for a, b in zip(self.x, self.y)]

    @property
    def final(self) -> State:
        return State(tuple(self.x[-1]), tuple(self.y[-1]))


@dataclass(frozen=True)
class QuantityDrift:
    initial: float
    max_deviation: float
    relative: float


@dataclass(frozen=True)
class DriftReport:
    quantities: dict[str, QuantityDrift]

    def __getitem__(self, name: str) -> QuantityDrift:
        return self.quantities[name]

    def worst(self) -> float:
        return max((q.relative for q in self.quantities.values()), default=0.0)

    def as_dict(self) -> dict:
        return {k: {"initial": q.initial, "max_deviation": q.max_deviation, "relative_drift": q.relative}
                for k, q in self.quantities.items()}


def rk4_step(f: Callable[[np.ndarray], np.ndarray], z: np.ndarray, h: float) -> np.ndarray:
    k1 = f(z)
    k2 = f(z + 0.5 * h * k1)
    k3 = f(z + 0.5 * h * k2)
    k4 = f(z + h * k3)
    return z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _grid(t_end: float, h: float) -> np.ndarray:
    n = max(1, math.ceil(t_end / h - 1e-9))
    t = np.arange(n + 1) * h
    t[-1] = t_end
    return t


def _monitor_evaluator(sys: LagrangianSystem, monitors: Mapping[str, Expr | Callable] | None,
                       groups: Sequence[MonitorGroup]):
    monitors = dict(monitors or {})
    names: list[str] = []
    exprs: list[Expr] = []
    calls: list[tuple[str, Callable]] = []
    for name, mon in monitors.items():
        if isinstance(mon, Expr):
            exprs.append(mon)
            names.append(name)
        else:
            calls.append((name, mon))
    names += [n for n, _ in calls]
    for g in groups:
        names += list(g.names)
    if len(set(names)) != len(names):
        raise ValueError("duplicate monitor names")
    compiled = compile_exprs(tuple(exprs), sys.algebroid.variables) if exprs else None
    m = sys.m

    def evaluate(z: np.ndarray) -> list[float]:
        out = list(compiled(*z)) if compiled else []
        x, y = z[:m], z[m:]
        out += [float(c(x, y)) for _, c in calls]
        for g in groups:
            out += [float(v) for v in g(x, y)]
        return out

    return names, evaluate


def simulate(sys: LagrangianSystem, s0, t_end: float, h: float,
             monitors: Mapping[str, Expr | Callable] | None = None,
             groups: Sequence[MonitorGroup] = ()) -> Trajectory:
    """Integrate the Euler-Lagrange field with classic RK4 at fixed step ``h``.

    Monitors are either expressions in the coordinates or callables
    ``(x, y) -> float``; ``groups`` yield several named values per state.
    Regularity is checked at every accepted state.  On a singular Hessian
    or a non-finite state :class:`SimulationAborted` is raised carrying the
    partial trajectory.
    """
    if not h > 0:
        raise ValueError("step size must be positive")
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    z = _flat(sys, s0).copy()
    m = sys.m
    names, monitor = _monitor_evaluator(sys, monitors, groups)
    grid = _grid(t_end, h)
    zs = np.empty((len(grid), len(z)))
    mons = np.empty((len(grid), len(names)))
    f = sys.rhs

    def partial(k: int) -> Trajectory:
        return Trajectory(grid[:k].copy(), zs[:k, :m].copy(), zs[:k, m:].copy(),
                          {n: mons[:k, j].copy() for j, n in enumerate(names)})

    k = 0
    try:
        for k in range(len(grid)):
            if k:
                with np.errstate(over="ignore", invalid="ignore"):
                    z = rk4_step(f, z, grid[k] - grid[k - 1])
                if not np.all(np.isfinite(z)):
                    raise SimulationAborted(f"non-finite state at t={grid[k]:.6g}", partial(k))
            cond = _condition(sys.hessian_at(z))
            if not cond < CONDITION_LIMIT:
                raise SingularHessianError(cond, z)
            zs[k] = z
            mons[k] = monitor(z)
    except SingularHessianError as exc:
        raise SimulationAborted(f"{exc} at t={grid[k]:.6g}", partial(k), exc) from None
    except DomainError as exc:
        raise SimulationAborted(f"domain error at t={grid[k]:.6g}: {exc}", partial(k), exc) from None
    return partial(len(grid))


def flow_points(A: LieAlgebroid, field_: ProlongedSection, Z: np.ndarray, t: float, h: float) -> np.ndarray:
    """Flow every column of ``Z`` (shape ``(m + p, N)``) for time ``t`` at once."""
    if not h > 0:
        raise ValueError("step size must be positive")
    Z = np.array(Z, dtype=float)
    if t == 0:
        return Z
    xdot, ydot = anchored_field(A, field_)
    f_raw = compile_array(xdot + ydot, A.variables)

    def f(v: np.ndarray) -> np.ndarray:
        return f_raw(*v)

    n = max(1, math.ceil(abs(t) / h - 1e-9))
    step = t / n
    try:
        for _ in range(n):
            with np.errstate(over="ignore", invalid="ignore"):
                Z = rk4_step(f, Z, step)
            if not np.all(np.isfinite(Z)):
                raise FloatingPointError("flow left the finite domain")
    except DomainError as exc:
        raise FloatingPointError(f"flow left the domain: {exc}") from None
    return Z


def flow_on_E(A: LieAlgebroid, field_: ProlongedSection, state, t: float, h: float) -> State:
    """Time-``t`` flow of the vector field on E anchored by ``field_`` (RK4, step about ``h``)."""
    z = state.flat if isinstance(state, State) else np.asarray(state, dtype=float)
    return State.from_flat(flow_points(A, field_, z[:, None], t, h)[:, 0], A.m)


def drift(traj: Trajectory) -> DriftReport:
    if len(traj) < 2:
        raise ValueError("drift needs at least two samples")
    out = {}
    for name, values in traj.monitors.items():
        initial = float(values[0])
        dev = float(np.max(np.abs(values - initial)))
        out[name] = QuantityDrift(initial, dev, dev / max(1.0, abs(initial)))
    return DriftReport(out)
