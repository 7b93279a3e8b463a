"""Equivalence of Lagrangians and their conserved quantities.

Covers gauge, geometric and dynamical equivalence, the decomposition of
null Lagrangians, Noether symmetries of complete lifts, one-parameter
gauge families generated by flows, and the non-Noether invariants read off
the characteristic polynomial of ``A' A^-1`` for two dynamically
equivalent Lagrangians.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .algebroid import (
    LieAlgebroid, OneForm, Section, apply_field, complete_lift, d_on_function,
    d_on_oneform, hat,
)
from .dynamics import CONDITION_LIMIT, LagrangianSystem, SingularHessianError, State, _condition
from .integrate import flow_points
from .symbolics import (
    ZERO, Expr, SampleDomain, add, as_expr, compile_array, compile_exprs, diff, equal_sampled,
    mul, sample_points, sub, substitute, vanishes_sampled,
)

__all__ = [
    "AlgebroidMismatch", "NotNullLagrangianError", "DecompositionError",
    "HypothesisViolated", "NotEquivalentError", "GaugeData", "GaugeCheck",
    "NoetherCertificate", "FamilyEntry", "FamilyReport", "CharPolyResult",
    "geometric_equiv", "dynamical_equiv", "is_gauge_pair", "trivial_decompose",
    "noether_test", "gauge_family", "char_poly", "charpoly_by_expansion",
    "newton_residual", "nonnoether_monitors", "CharPolyMonitors", "pfaffian",
    "two_form_char_poly", "sample_states",
]


class AlgebroidMismatch(ValueError):
    pass


class NotNullLagrangianError(ValueError):
    pass


class DecompositionError(ValueError):
    pass


class HypothesisViolated(ValueError):
    pass


class NotEquivalentError(ValueError):
    pass


@dataclass(frozen=True)
class GaugeData:
    alpha: OneForm
    V: Expr


@dataclass(frozen=True)
class GaugeCheck:
    passed: bool
    residuals: dict[str, float]


@dataclass(frozen=True)
class NoetherCertificate:
    """Outcome of a Noether test.  ``f`` is ``None`` when the test failed."""

    passed: bool
    residual: float
    X: Section
    h: Expr
    f: Expr | None = None
    K: Expr | None = None


def _same_algebroid(a: LagrangianSystem, b: LagrangianSystem) -> LieAlgebroid:
    if a.algebroid != b.algebroid:
        raise AlgebroidMismatch("Lagrangians live on different algebroids")
    return a.algebroid


# --------------------------------------------------------------------------
# Equivalences
# --------------------------------------------------------------------------


def geometric_equiv(sysL: LagrangianSystem, sysL2: LagrangianSystem,
                    domain: SampleDomain | None = None) -> tuple[bool, float]:
    """Same symplectic 2-form coefficients, decided by sampling."""
    A = _same_algebroid(sysL, sysL2)
    return equal_sampled(sysL.omega.entries(), sysL2.omega.entries(), domain, A.variables)


def sample_states(sys: LagrangianSystem, domain: SampleDomain | None = None,
                  n: int | None = None, *others: LagrangianSystem) -> list[State]:
    """Draw states from ``domain`` that are regular for ``sys`` (and ``others``).

    A singular draw is replaced at most three times before giving up.
    """
    domain = domain or SampleDomain()
    A = sys.algebroid
    rng = np.random.default_rng(domain.seed)
    n = domain.n if n is None else n
    out = []
    for _ in range(n):
        for attempt in range(4):
            z = sample_points(A.variables, domain, rng, n=1)[0]
            try:
                ok = all(_condition(s.hessian_at(z)) < CONDITION_LIMIT for s in (sys, *others))
            except ArithmeticError:
                ok = False
            if ok:
                out.append(State.from_flat(z, A.m))
                break
        else:
            raise SingularHessianError(float("inf"), z)
    return out


def dynamical_equiv(sysL: LagrangianSystem, sysL2: LagrangianSystem,
                    states: Sequence[State] | None = None,
                    domain: SampleDomain | None = None, tol: float = 1e-8) -> tuple[bool, float]:
    """Same Euler-Lagrange field at every sample state.

    The per-state test is ``|Z - Z'| <= tol * max(1, |Z|, |Z'|)``; the
    returned residual is the largest absolute difference.
    """
    _same_algebroid(sysL, sysL2)
    if states is None:
        states = sample_states(sysL, domain, None, sysL2)
    ok, worst = True, 0.0
    for s in states:
        z = s.flat if isinstance(s, State) else np.asarray(s, float)
        a = sysL.rhs(z, check=True)
        b = sysL2.rhs(z, check=True)
        gap = float(np.max(np.abs(a - b), initial=0.0))
        scale = max(1.0, float(np.max(np.abs(a), initial=0.0)), float(np.max(np.abs(b), initial=0.0)))
        ok &= gap <= tol * scale
        worst = max(worst, gap)
    return ok, worst


def is_gauge_pair(sysL: LagrangianSystem, sysL2: LagrangianSystem, g: GaugeData,
                  domain: SampleDomain | None = None) -> GaugeCheck:
    A = _same_algebroid(sysL, sysL2)
    domain = domain or SampleDomain()
    V = A.restrict_to_base(g.V, "gauge function")
    difference = sub(sysL2.L, add(sysL.L, hat(A, g.alpha), V))
    dal = [e for row in d_on_oneform(A, g.alpha) for e in row]
    checks = {
        "lagrangian_difference": vanishes_sampled([difference], domain, A.variables),
        "d_alpha": vanishes_sampled(dal, domain, A.base_coords),
        "d_V": vanishes_sampled(list(d_on_function(A, V)), domain, A.base_coords),
    }
    return GaugeCheck(all(ok for ok, _ in checks.values()), {k: r for k, (_, r) in checks.items()})


def trivial_decompose(sysL0: LagrangianSystem, domain: SampleDomain | None = None) -> GaugeData:
    """Write a null Lagrangian as ``hat(alpha) + V`` with ``alpha`` closed."""
    A = sysL0.algebroid
    domain = domain or SampleDomain()
    ok, resid = vanishes_sampled(sysL0.omega.entries(), domain, A.variables)
    if not ok:
        raise NotNullLagrangianError(f"not a null Lagrangian (omega residual {resid:.3e})")
    alpha = sysL0.theta
    V = sub(sysL0.L, add(*(mul(y, a) for y, a in zip(A.y, alpha))))
    y_dep = [diff(e, y) for e in (*alpha, V) for y in A.fiber_coords]
    ok, resid = vanishes_sampled(y_dep, domain, A.variables)
    if not ok:
        raise DecompositionError(f"decomposition failed: fiber dependence {resid:.3e}")
    # sampled y-independence established; drop any fiber variables left structurally
    at_zero = {y: 0.0 for y in A.fiber_coords}
    alpha = tuple(substitute(a, at_zero) for a in alpha)
    V = substitute(V, at_zero)
    dal = [e for row in d_on_oneform(A, alpha) for e in row]
    ok, resid = vanishes_sampled(dal, domain, A.base_coords)
    if not ok:
        raise DecompositionError(f"decomposition failed: alpha not closed ({resid:.3e})")
    return GaugeData(OneForm(alpha), V)


# --------------------------------------------------------------------------
# Noether
# --------------------------------------------------------------------------


def noether_test(sysL: LagrangianSystem, X, h=ZERO, K=None,
                 domain: SampleDomain | None = None, tol: float | None = None) -> NoetherCertificate:
    """Test whether the complete lift of ``X`` is a symmetry with gauge term ``h``.

    The residual is ``X^c(L) - rho^i_a dh/dx^i y^a``.  On success the
    conserved quantity is ``f = X^a dL/dy^a - h (+ K)``.
    """
    A = sysL.algebroid
    domain = domain or SampleDomain()
    Xc = complete_lift(A, X)
    h = A.restrict_to_base(h, "gauge function")
    r = sub(apply_field(A, Xc, sysL.L), hat(A, d_on_function(A, h)))
    ok, resid = vanishes_sampled([r], domain, A.variables, tol=tol)
    Kx = None
    if K is not None:
        Kx = as_expr(K)
        closed = [A.anchor_apply(a, Kx) for a in range(A.p)] + [diff(Kx, y) for y in A.fiber_coords]
        k_ok, k_resid = vanishes_sampled(closed, domain, A.variables, tol=tol)
        if not k_ok:
            raise ValueError(f"K is not closed (residual {k_resid:.3e})")
    section = Section(Xc.xi)
    if not ok:
        return NoetherCertificate(False, resid, section, h, None, Kx)
    f = sub(add(*(mul(x, t) for x, t in zip(Xc.xi, sysL.theta))), h)
    if Kx is not None:
        f = add(f, Kx)
    return NoetherCertificate(True, resid, section, h, f, Kx)


# --------------------------------------------------------------------------
# One-parameter gauge families
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class FamilyEntry:
    t: float
    passed: bool
    residuals: dict[str, float]


@dataclass(frozen=True)
class FamilyReport:
    beta: OneForm
    W: Expr
    hypothesis_residuals: dict[str, float]
    entries: list[FamilyEntry] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)


def gauge_family(sysL: LagrangianSystem, X, ts: Sequence[float], h_flow: float = 1e-3,
                 domain: SampleDomain | None = None, fd_step: float = 1e-5,
                 tol: float = 1e-4, n_points: int = 8) -> FamilyReport:
    """Check that ``L_t = L o flow_t(X^c)`` stays gauge equivalent to ``L``.

    First the hypothesis ``X^c(L) = hat(beta) + W`` with closed ``beta`` and
    ``W`` is verified symbolically.  Then for every ``t`` the difference
    ``G = L_t - L`` is probed by central differences: ``dG/dy`` must not
    depend on ``y``, the resulting 1-form must be closed, and the remainder
    ``G - y.dG/dy`` must be killed by the anchor.
    """
    A = sysL.algebroid
    domain = domain or SampleDomain()
    Xc = complete_lift(A, X)
    XL = apply_field(A, Xc, sysL.L)
    beta = tuple(diff(XL, y) for y in A.fiber_coords)
    W = sub(XL, add(*(mul(y, b) for y, b in zip(A.y, beta))))
    hyp = {}
    _, hyp["fiber_linear"] = vanishes_sampled(
        [diff(e, y) for e in (*beta, W) for y in A.fiber_coords], domain, A.variables)
    if hyp["fiber_linear"] <= domain.atol:
        beta = tuple(substitute(b, {y: 0.0 for y in A.fiber_coords}) for b in beta)
        W = substitute(W, {y: 0.0 for y in A.fiber_coords})
        _, hyp["d_beta"] = vanishes_sampled([e for row in d_on_oneform(A, beta) for e in row],
                                            domain, A.base_coords)
        _, hyp["d_W"] = vanishes_sampled(list(d_on_function(A, W)), domain, A.base_coords)
    if any(r > domain.atol for r in hyp.values()):
        raise HypothesisViolated(f"hypothesis violated: {hyp}")

    L = compile_array((sysL.L,), A.variables)
    m, p = A.m, A.p
    rng = np.random.default_rng(domain.seed)
    base_pts = sample_points(A.base_coords, domain, rng, n=n_points)
    fiber_pts = sample_points(A.fiber_coords, domain, rng, n=2 * n_points)
    rho = compile_exprs(tuple(e for row in A.anchor for e in row), A.base_coords)
    C = compile_exprs(tuple(e for pl in A.structure for row in pl for e in row), A.base_coords)
    ex, ey = fd_step * np.eye(m), fd_step * np.eye(p)

    # every probe point for all base samples, flowed together in one batch per t
    probes: list[np.ndarray] = []

    def probe(x, y) -> int:
        probes.append(np.concatenate([x, y]))
        return len(probes) - 1

    def fiber_stencil(x, y) -> list[tuple[int, int]]:
        return [(probe(x, y + ey[a]), probe(x, y - ey[a])) for a in range(p)]

    layout = []
    for k, x in enumerate(base_pts):
        y1, y2 = fiber_pts[2 * k], fiber_pts[2 * k + 1]
        shifted = [[(probe(x + s * ex[i], y1), fiber_stencil(x + s * ex[i], y1)) for s in (1, -1)]
                   for i in range(m)]
        layout.append((x, y1, fiber_stencil(x, y1), fiber_stencil(x, y2), shifted))
    Z = np.array(probes).T
    L0 = L(*Z)[0]

    report = FamilyReport(OneForm(beta), W, hyp)
    for t in ts:
        G = L(*flow_points(A, Xc, Z, float(t), h_flow))[0] - L0

        def dG_dy(stencil) -> np.ndarray:
            return np.array([(G[i] - G[j]) / (2 * fd_step) for i, j in stencil])

        res = {"fiber_dependence": 0.0, "d_alpha": 0.0, "d_W": 0.0}
        for x, y1, st1, st2, shifted in layout:
            a1 = dG_dy(st1)
            res["fiber_dependence"] = max(res["fiber_dependence"], float(np.max(np.abs(a1 - dG_dy(st2)), initial=0)))
            # J[i, b] = d alpha_b / d x^i ;  w[i] = d W / d x^i, with W = G - y.dG/dy
            J = np.empty((m, p))
            w = np.empty(m)
            for i, ((up, st_up), (down, st_down)) in enumerate(shifted):
                a_up, a_down = dG_dy(st_up), dG_dy(st_down)
                J[i] = (a_up - a_down) / (2 * fd_step)
                w[i] = ((G[up] - y1 @ a_up) - (G[down] - y1 @ a_down)) / (2 * fd_step)
            rh = np.array(rho(*x)).reshape(p, m)
            Cx = np.array(C(*x)).reshape(p, p, p)
            R = rh @ J  # R[a, b] = rho_a(alpha_b)
            dalpha = R - R.T - np.einsum("abg,g->ab", Cx, a1)
            res["d_alpha"] = max(res["d_alpha"], float(np.max(np.abs(dalpha), initial=0)))
            res["d_W"] = max(res["d_W"], float(np.max(np.abs(rh @ w), initial=0)))
        report.entries.append(FamilyEntry(float(t), all(v <= tol for v in res.values()), res))
    return report


# --------------------------------------------------------------------------
# Characteristic polynomial and non-Noether invariants
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CharPolyResult:
    """``f(lambda) = det(M - lambda I) = sum_k coefficients[k] lambda^(p-k)``, ``M = A' A^-1``."""

    coefficients: np.ndarray
    traces: np.ndarray
    newton_residual: float
    direct_residual: float | None = None

    def __call__(self, lam: float) -> float:
        return float(np.polyval(self.coefficients, lam))


def newton_residual(coefficients: Sequence[float], traces: Sequence[float]) -> float:
    """Scaled residual of Newton's identities between ``det(M - lambda I)`` and power traces."""
    c = np.asarray(coefficients, float)
    t = np.asarray(traces, float)
    p = len(t)
    a = c * (-1) ** p  # monic det(lambda I - M) coefficients
    worst = 0.0
    for k in range(1, p + 1):
        terms = [k * a[k], t[k - 1]] + [a[j] * t[k - j - 1] for j in range(1, k)]
        scale = max(1.0, max(abs(v) for v in terms))
        worst = max(worst, abs(sum(terms)) / scale)
    return worst


def charpoly_by_expansion(M: np.ndarray) -> np.ndarray:
    """``det(M - lambda I)`` by cofactor expansion over polynomial entries."""
    p = M.shape[0]
    # entries as ascending coefficient arrays
    E = [[np.array([M[i, j], -1.0]) if i == j else np.array([M[i, j]]) for j in range(p)] for i in range(p)]

    def det(rows: list[int], cols: list[int]) -> np.ndarray:
        if len(rows) == 1:
            return E[rows[0]][cols[0]]
        total = np.zeros(1)
        r, rest = rows[0], rows[1:]
        for k, c in enumerate(cols):
            minor = det(rest, cols[:k] + cols[k + 1:])
            term = P.polymul(E[r][c], minor)
            total = P.polyadd(total, term if k % 2 == 0 else -term)
        return total

    asc = det(list(range(p)), list(range(p))) if p else np.ones(1)
    asc = np.concatenate([asc, np.zeros(p + 1 - len(asc))])
    return asc[::-1].copy()


def char_poly(A: np.ndarray, A2: np.ndarray, cross_check: bool = True) -> CharPolyResult:
    """Characteristic polynomial of ``A' A^-1`` from power traces (Faddeev-LeVerrier).

    ``M = A' A^-1`` is formed with linear solves, ``t_k = tr(M^k)`` and
    the coefficients follow from Newton's identities.  For ``p <= 3`` the
    result is compared against a direct cofactor expansion; that residual
    is the largest coefficient gap divided by ``max(1, max |c_k|)``.
    """
    A = np.atleast_2d(np.asarray(A, float))
    A2 = np.atleast_2d(np.asarray(A2, float))
    p = A.shape[0]
    if A.shape != (p, p) or A2.shape != (p, p):
        raise ValueError("A and A' must be square and of equal size")
    cond = _condition(A)
    if not cond < CONDITION_LIMIT:
        raise SingularHessianError(cond)
    M = np.linalg.solve(A.T, A2.T).T
    traces = np.empty(p)
    Mk = np.eye(p)
    for k in range(p):
        Mk = Mk @ M
        traces[k] = np.trace(Mk)
    a = np.zeros(p + 1)
    a[0] = 1.0
    for k in range(1, p + 1):
        a[k] = -(traces[k - 1] + sum(a[j] * traces[k - j - 1] for j in range(1, k))) / k
    coeffs = a * (-1) ** p
    direct = None
    if cross_check and p <= 3:
        ref = charpoly_by_expansion(M)
        direct = float(np.max(np.abs(ref - coeffs)) / max(1.0, float(np.max(np.abs(ref)))))
    return CharPolyResult(coeffs, traces, newton_residual(coeffs, traces), direct)


class CharPolyMonitors:
    """State-indexed monitors ``c_0..c_p`` and ``t_1..t_p`` for a Lagrangian pair."""

    def __init__(self, sysL: LagrangianSystem, sysL2: LagrangianSystem):
        self.sysL, self.sysL2 = sysL, sysL2
        p = sysL.p
        self.names = [f"c{k}" for k in range(p + 1)] + [f"t{k}" for k in range(1, p + 1)]

    def __call__(self, x, y) -> list[float]:
        z = np.concatenate([np.asarray(x, float), np.asarray(y, float)])
        res = char_poly(self.sysL.hessian_at(z), self.sysL2.hessian_at(z), cross_check=False)
        return list(res.coefficients) + list(res.traces)

    def at(self, state: State) -> dict[str, float]:
        return dict(zip(self.names, self(state.x, state.y)))


def nonnoether_monitors(sysL: LagrangianSystem, sysL2: LagrangianSystem,
                        domain: SampleDomain | None = None, force: bool = False) -> CharPolyMonitors:
    """Monitors built from ``det(A' A^-1 - lambda I)``; requires dynamical equivalence."""
    _same_algebroid(sysL, sysL2)
    ok, resid = dynamical_equiv(sysL, sysL2, domain=domain)
    if not ok:
        msg = f"Lagrangians are not dynamically equivalent (residual {resid:.3e})"
        if not force:
            raise NotEquivalentError(msg)
        warnings.warn(msg, stacklevel=2)
    return CharPolyMonitors(sysL, sysL2)


def pfaffian(W: np.ndarray) -> float:
    """Pfaffian of an antisymmetric matrix by skew elimination with pivoting."""
    W = np.array(W, dtype=float)
    n = W.shape[0]
    if n % 2:
        return 0.0
    result = 1.0
    for k in range(0, n - 1, 2):
        piv = k + 1 + int(np.argmax(np.abs(W[k, k + 1:])))
        if piv != k + 1:
            W[[k + 1, piv]] = W[[piv, k + 1]]
            W[:, [k + 1, piv]] = W[:, [piv, k + 1]]
            result = -result
        if W[k, k + 1] == 0.0:
            return 0.0
        result *= W[k, k + 1]
        if k + 2 < n:
            tau = W[k, k + 2:] / W[k, k + 1]
            u = W[k + 1, k + 2:].copy()
            W[k + 2:, k + 2:] += np.outer(u, tau) - np.outer(tau, u)
    return result


def two_form_char_poly(W: np.ndarray, W2: np.ndarray) -> np.ndarray:
    """Coefficients of ``f`` with ``(W2 - lambda W)^(wedge p) = f(lambda) W^(wedge p)``.

    Both arguments are antisymmetric ``2p x 2p`` matrices of 2-forms; the
    coefficients are ordered as in :class:`CharPolyResult`.
    """
    W = np.asarray(W, float)
    W2 = np.asarray(W2, float)
    n = W.shape[0]
    p = n // 2
    base = pfaffian(W)
    if base == 0.0:
        raise SingularHessianError(float("inf"))
    lams = np.arange(p + 1, dtype=float) - p / 2
    vals = np.array([pfaffian(W2 - lam * W) / base for lam in lams])
    return np.linalg.solve(np.vander(lams, p + 1), vals)
