"""Shared fixtures: small seeded sample sets and a few standard geometries."""

import numpy as np
import pytest

from killing4d import jets
from killing4d.ansatz import ProfilePair, Poly, SphereSpec, build_hyperbolic_ambitoric, build_round_sphere
from killing4d.chart import Domain, Field, sample_points
from killing4d.riemann import Geometry

X_RANGE = (1.0, 1.5)
Y_RANGE = (0.2, 0.6)


def random_profile_pair(seed: int) -> ProfilePair:
    """Polynomials of degree <= 4 that stay >= 0.3 on the default box."""
    rng = np.random.default_rng(seed)
    while True:
        a = rng.uniform(-0.5, 0.5, size=5)
        b = rng.uniform(-0.5, 0.5, size=5)
        a[0] += 1.5
        b[0] += 1.5
        A, B = Poly(a), Poly(b)
        xs, ys = np.linspace(*X_RANGE, 101), np.linspace(*Y_RANGE, 101)
        if min(A.value(x) for x in xs) > 0.3 and min(B.value(y) for y in ys) > 0.3:
            return ProfilePair(A, B, X_RANGE, Y_RANGE)


def metric_field(fn, domain=None, name="g"):
    """Metric field from an expression in the coordinate jets."""
    return Field(lambda p: fn(jets.seed(p)), domain, "metric", name)


def diag_metric(entries):
    def fn(c):
        z = 0.0 * c[0]
        d = entries(c)
        return jets.array([[d[i] if i == j else z for j in range(4)] for i in range(4)])
    return fn


BOX = Domain(((-0.5, 0.5),) * 4, 1e-2)


@pytest.fixture(scope="session")
def flat_geo():
    return Geometry(metric_field(diag_metric(lambda c: [1.0 + 0 * c[0]] * 4), BOX), 1, BOX, "flat")


@pytest.fixture(scope="session")
def ambitoric_model():
    return build_hyperbolic_ambitoric(random_profile_pair(0))


@pytest.fixture(scope="session")
def ambitoric_points(ambitoric_model):
    return sample_points(ambitoric_model.domain, 12, seed=3)


@pytest.fixture(scope="session")
def sphere_model():
    return build_round_sphere(SphereSpec(1.0, 2.0))


@pytest.fixture(scope="session")
def sphere_points(sphere_model):
    return sample_points(sphere_model.domain, 12, seed=5)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
