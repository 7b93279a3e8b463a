import numpy as np
import pytest

from liemech.algebroid import LieAlgebroid
from liemech.dynamics import LagrangianSystem
from liemech.models import load
from liemech.symbolics import SampleDomain, parse


def levi_civita():
    eps = np.zeros((3, 3, 3))
    for a, b, c in [(0, 1, 2), (1, 2, 0), (2, 0, 1)]:
        eps[a, b, c] = 1.0
        eps[b, a, c] = -1.0
    return eps


def rigid_body(I=(3.0, 2.0, 2.0)):
    so3 = LieAlgebroid.lie_algebra(levi_civita().tolist(), name="so3")
    L = parse(f"{I[0]}*y1^2/2 + {I[1]}*y2^2/2 + {I[2]}*y3^2/2")
    return LagrangianSystem(so3, L)


@pytest.fixture
def so3():
    return LieAlgebroid.lie_algebra(levi_civita().tolist(), name="so3")


@pytest.fixture
def tr1():
    return LieAlgebroid.tangent(["x1"])


@pytest.fixture
def tr2():
    return LieAlgebroid.tangent(["x1", "x2"])


@pytest.fixture
def action():
    return load("so3-action").algebroid


@pytest.fixture
def domain():
    return SampleDomain()


CATALOG_ALGEBROIDS = ["rigid-body", "tangent-r1", "tangent-r2", "harmonic-pair", "so3-action"]


@pytest.fixture(params=CATALOG_ALGEBROIDS)
def catalog_model(request):
    return load(request.param)
