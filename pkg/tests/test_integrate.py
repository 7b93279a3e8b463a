import math

import numpy as np
import pytest

from liemech.algebroid import complete_lift
from liemech.dynamics import LagrangianSystem, State
from liemech.integrate import SimulationAborted, Trajectory, drift, flow_on_E, rk4_step, simulate
from liemech.symbolics import parse

from conftest import rigid_body


def test_oscillator_half_period(tr1):
    traj = simulate(LagrangianSystem(tr1, "(y1^2 - x1^2)/2"), State((1.0,), (0.0,)), math.pi, 1e-3)
    assert traj.times[-1] == math.pi
    assert abs(traj.final.x[0] + 1.0) <= 1e-8


def test_free_particle_exact(tr1):
    traj = simulate(LagrangianSystem(tr1, "y1^2/2"), State((0.0,), (1.0,)), 1.0, 1e-2)
    assert traj.final.x[0] == pytest.approx(1.0, abs=1e-13)
    assert np.all(np.diff(traj.times) > 0)


def test_rigid_body_monitors():
    sys = rigid_body()
    traj = simulate(sys, State((), (1.0, 0.5, -0.7)), 10.0, 1e-3,
                    monitors={"I1y1": parse("3*y1"), "energy": sys.energy})
    rep = drift(traj)
    assert rep["I1y1"].max_deviation <= 1e-8
    assert rep["energy"].max_deviation <= 1e-8
    assert len(traj) == 10001 and len(traj.monitors["energy"]) == len(traj)


def test_callable_monitors_and_groups(tr1):
    class Pair:
        names = ["a", "b"]

        def __call__(self, x, y):
            return [x[0], 2 * y[0]]

    traj = simulate(LagrangianSystem(tr1, "y1^2/2"), State((0.0,), (1.0,)), 0.1, 0.05,
                    monitors={"sq": lambda x, y: x[0] ** 2}, groups=[Pair()])
    assert list(traj.monitors) == ["sq", "a", "b"]
    assert traj.monitors["b"][-1] == 2.0


def test_rk4_order(tr1):
    sys = LagrangianSystem(tr1, "(y1^2 - x1^2)/2")
    errs = []
    for h in (0.1, 0.05, 0.025):
        final = simulate(sys, State((1.0,), (0.0,)), 2.0, h).final
        errs.append(abs(final.x[0] - math.cos(2.0)))
    for coarse, fine in zip(errs, errs[1:]):
        assert 12 <= coarse / fine <= 20


def test_rk4_step_linear():
    z = rk4_step(lambda v: -v, np.array([1.0]), 0.1)
    taylor = sum((-0.1) ** k / math.factorial(k) for k in range(5))
    assert z[0] == pytest.approx(taylor, abs=1e-15)


def test_singular_abort_keeps_partial(tr2):
    # Hessian diag(1, 1 - x1); free motion x1 = t lands exactly on x1 = 1 at h = 1/4
    sys = LagrangianSystem(tr2, "y1^2/2 + (1 - x1)*y2^2/2")
    with pytest.raises(SimulationAborted) as info:
        simulate(sys, State((0.0, 0.0), (1.0, 0.0)), 2.0, 0.25)
    part = info.value.trajectory
    assert len(part) == 4 and part.x[-1, 0] == 0.75
    assert "singular" in str(info.value)


def test_non_finite_abort(tr1):
    sys = LagrangianSystem(tr1, "y1^2/2 + x1^4")  # force 4 x1^3 blows up
    with pytest.raises(SimulationAborted):
        simulate(sys, State((5.0,), (0.0,)), 50.0, 0.5)


def test_bad_step_rejected(tr1):
    with pytest.raises(ValueError):
        simulate(LagrangianSystem(tr1, "y1^2/2"), State((0.0,), (1.0,)), 1.0, 0.0)


def test_flow_rotation(so3):
    Xc = complete_lift(so3, [1, 0, 0])
    out = flow_on_E(so3, Xc, State((), (0.0, 1.0, 0.0)), math.pi / 2, 1e-3)
    assert np.allclose(out.y, (0.0, 0.0, -1.0), atol=1e-8)


def test_flow_identity_at_zero(action):
    Xc = complete_lift(action, [parse("x1"), parse("1"), parse("x2")])
    s = State((0.1, 0.2, 0.3), (1.0, 2.0, 3.0))
    assert flow_on_E(action, Xc, s, 0.0, 1e-3) == s


@pytest.mark.parametrize("section", [["1", "x3", "0"], ["x2", "x1*x3", "1"], ["0", "0", "x1^2"]])
def test_flow_reversible(action, section):
    Xc = complete_lift(action, [parse(c) for c in section])
    s = State((0.3, -0.4, 0.5), (1.0, -0.5, 0.2))
    there = flow_on_E(action, Xc, s, 0.7, 1e-3)
    back = flow_on_E(action, Xc, there, -0.7, 1e-3)
    assert np.allclose(back.flat, s.flat, atol=1e-8)


def test_flow_blow_up(tr1):
    Xc = complete_lift(tr1, [parse("x1^2")])
    with pytest.raises(FloatingPointError):
        flow_on_E(tr1, Xc, State((1.0,), (1.0,)), 5.0, 0.01)


def test_drift_examples():
    t = np.linspace(0, 1, 11)
    traj = Trajectory(t, np.zeros((11, 0)), np.zeros((11, 1)),
                      {"c": np.full(11, 4.0), "t": t.copy(), "big": 10.0 + t})
    rep = drift(traj)
    assert rep["c"].max_deviation == 0.0
    assert rep["t"].max_deviation == 1.0
    assert rep["big"].relative == pytest.approx(0.1)
    assert rep.worst() == 1.0


def test_drift_needs_two_samples():
    with pytest.raises(ValueError):
        drift(Trajectory(np.zeros(1), np.zeros((1, 0)), np.zeros((1, 1)), {}))


def test_trajectory_rejects_non_increasing_times():
    with pytest.raises(ValueError):
        Trajectory(np.array([0.0, 0.0]), np.zeros((2, 0)), np.zeros((2, 1)), {})
