import numpy as np
import pytest

from killing4d import jets
from killing4d.chart import (ConfigurationError, Constraint, Domain, DomainError, Field,
                             coordinate_field, fd_oracle, grid_points, sample_points)
from conftest import random_profile_pair


def test_rectangle_and_predicate_kinds():
    d = Domain(((0, 1),) * 4)
    assert d.kind == "rectangle"
    assert d.with_constraints(Constraint("c", lambda p: 1.0)).kind == "predicate"


def test_wrong_dimension_rejected():
    with pytest.raises(ConfigurationError):
        Domain(((0, 1),) * 3)


def test_samples_respect_margin_and_constraints():
    dom = random_profile_pair(1).domain()
    pts = sample_points(dom, 10_000, seed=11)
    assert len(pts) == 10_000
    P = np.array(pts)
    assert np.all(P[:, 0] - np.abs(P[:, 1]) >= dom.margin)
    for i, (lo, hi) in enumerate(dom.bounds):
        assert np.all(P[:, i] >= lo + dom.margin) and np.all(P[:, i] <= hi - dom.margin)


def test_sampling_is_deterministic():
    d = Domain(((0, 1),) * 4, 0.05)
    a = np.array(sample_points(d, 50, seed=7))
    b = np.array(sample_points(d, 50, seed=7))
    c = np.array(sample_points(d, 50, seed=8))
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_empty_domain_is_configuration_error():
    d = Domain(((0, 1),) * 4, 0.01, (Constraint("never", lambda p: -1.0),))
    with pytest.raises(ConfigurationError, match="no admissible"):
        sample_points(d, 10, max_draws=3)
    with pytest.raises(ConfigurationError, match="empty"):
        sample_points(Domain(((0, 0.01),) * 4, 0.01), 1)


def test_field_checks_domain():
    d = Domain(((0, 1),) * 4)
    f = coordinate_field(lambda c: c[0] * c[1], d)
    assert f([0.5] * 4).v == 0.25
    with pytest.raises(DomainError, match="c0"):
        f([1.5, 0.5, 0.5, 0.5])
    assert f.unchecked([2.0, 2.0, 0, 0]).v == 4.0


def test_fd_oracle_known_derivatives():
    f = coordinate_field(lambda c: c[0] ** 3 + c[1] * c[2], None)
    p = np.array([0.5, 1.0, 2.0, 0.0])
    assert np.allclose(fd_oracle(f, p, 1), [0.75, 2.0, 1.0, 0.0], atol=1e-10)
    H = fd_oracle(f, p, 2)
    assert np.isclose(H[0, 0], 3.0, atol=1e-7) and np.isclose(H[1, 2], 1.0, atol=1e-7)


def test_fd_oracle_needs_margin():
    d = Domain(((0, 1),) * 4)
    f = coordinate_field(lambda c: c[0], d)
    with pytest.raises(DomainError, match="margin"):
        fd_oracle(f, [1e-4, 0.5, 0.5, 0.5])


def test_grid_points_drop_inadmissible():
    d = Domain(((0, 1),) * 4, 0.0, (Constraint("c0 < c1", lambda p: p[1] - p[0]),))
    pts = grid_points(d, 5, 5)
    assert 0 < len(pts) < 25
    assert all(q[1] > q[0] for q in pts)


def test_field_value_is_memoised():
    calls = []

    def fn(p):
        calls.append(p)
        return jets.seed(p)[0]

    f = Field(fn)
    f([0.1, 0, 0, 0]); f([0.1, 0, 0, 0])
    assert len(calls) == 1
