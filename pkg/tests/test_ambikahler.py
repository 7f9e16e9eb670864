import numpy as np
import pytest

from killing4d import ambikahler as ak
from killing4d import jets
from killing4d import killing as kl
from killing4d import riemann as rm
from killing4d.chart import DomainError, Field
from killing4d.riemann import Geometry

EPS = 1e-2


@pytest.fixture(scope="module")
def bundle(ambitoric_model):
    return ak.build_bundle(ambitoric_model.geo, ambitoric_model.psi)


def _bad_psi(m, eps=EPS):
    def fn(p):
        c = jets.seed(p)
        extra = np.zeros((4, 4)); extra[0, 2], extra[2, 0] = 1.0, -1.0
        return m.psi(p) + jets.einsum("ij,->ij", extra, eps * c[1] * c[3])
    return Field(fn, m.domain, "twoform")


def test_f_pm_are_x_plus_minus_y(bundle, ambitoric_points):
    for p in ambitoric_points:
        assert np.isclose(bundle.f_plus(p).v, p[0] + p[1], atol=1e-12)
        assert np.isclose(bundle.f_minus(p).v, p[0] - p[1], atol=1e-12)
        assert np.isclose(bundle.x(p).v, p[0]) and np.isclose(bundle.y(p).v, p[1])


def test_structures_match_closed_forms(ambitoric_model, bundle, ambitoric_points):
    m = ambitoric_model
    for p in ambitoric_points:
        assert np.allclose(bundle.J_plus(p).v, m.J_plus(p).v, atol=1e-10)
        assert np.allclose(bundle.J_minus(p).v, m.J_minus(p).v, atol=1e-10)
        assert np.allclose(bundle.tau(p).v, m.tau(p).v, atol=1e-10)
        assert np.allclose(bundle.omega_plus(p).v, m.omega_plus(p).v, atol=1e-10)
        assert np.allclose(bundle.omega_minus(p).v, m.omega_minus(p).v, atol=1e-10)


def test_algebraic_invariants(bundle, ambitoric_points):
    for p in ambitoric_points:
        assert max(ak.structure_residuals(bundle, p).values()) < 1e-10
        assert ak.reconstruction_residual(bundle, p) < 1e-10


def test_kahler_pair(bundle, ambitoric_points):
    for p in ambitoric_points[:6]:
        assert ak.kahler_residual(bundle, "+", p) < 1e-9
        assert ak.kahler_residual(bundle, "-", p) < 1e-9
        assert ak.nijenhuis_residual(bundle.geo, bundle.J_plus, p) < 1e-9
        assert ak.nijenhuis_residual(bundle.geo, bundle.J_minus, p) < 1e-9
        assert ak.closedness_residual(bundle.geo_plus, bundle.omega_plus, p) < 1e-10
        assert ak.closedness_residual(bundle.geo_minus, bundle.omega_minus, p) < 1e-10


def test_kahler_negative_control_wrong_metric(bundle, ambitoric_points):
    # J+ is parallel for g+ = f+^-2 g, not for g itself
    assert max(ak.kahler_residual_raw(bundle.geo, bundle.J_plus, p) for p in ambitoric_points) > 1e-4
    with pytest.raises(ValueError):
        ak.kahler_residual(bundle, "x", ambitoric_points[0])


def test_kahler_negative_control_perturbed_psi(ambitoric_model, ambitoric_points):
    bad = ak.build_bundle(ambitoric_model.geo, _bad_psi(ambitoric_model))
    assert max(ak.kahler_residual(bad, "+", p) for p in ambitoric_points) > 1e-4
    assert max(ak.tau_df_residual(bad, p) for p in ambitoric_points) > 1e-4


def test_gradient_relations(bundle, ambitoric_points):
    for p in ambitoric_points:
        assert ak.tau_df_residual(bundle, p) < 1e-10
        assert ak.jdf_residual(bundle, p) < 1e-10
        assert ak.log_derivative_residual(bundle, p) < 1e-9
        assert ak.orthogonality_residual(bundle, p) < 1e-10
    assert ak.kappa_closedness(bundle, ambitoric_points[:4]) < 1e-9


def test_ricci_structure_with_closed_form_b(ambitoric_model, bundle, ambitoric_points):
    m = ambitoric_model
    for p in ambitoric_points[:6]:
        bval = m.b(p[0], p[1])
        r = ak.ricci_structure(bundle, p, bval)
        assert r["[Ric,J+]"] < 1e-8 and r["[Ric,J-]"] < 1e-8 and r["Ric-aI-btau"] < 1e-8
        assert abs(r["scal"] - m.scal(p[0], p[1])) < 1e-8
    # negative control: a wrong b is caught
    p = ambitoric_points[0]
    wrong = ak.ricci_structure(bundle, p, m.b(p[0], p[1]) + 1e-3)
    assert wrong["Ric-aI-btau"] > 1e-4


def test_involutivity_of_T_plus_fails_for_generic_ansatz(bundle, ambitoric_points):
    assert max(ak.involutivity_residual(bundle, "+", p) for p in ambitoric_points) > 1e-3
    with pytest.raises(ValueError):
        ak.involutivity_residual(bundle, "?", ambitoric_points[0])


def test_separation(ambitoric_model, bundle, ambitoric_points):
    A, B = ambitoric_model.spec.A, ambitoric_model.spec.B
    for p in ambitoric_points:
        r = ak.separation_residuals(bundle, p, A.val_der, B.val_der)
        assert max(r.values()) < 1e-9


def test_separation_negative_control(bundle, ambitoric_points):
    A = lambda z: (1.0 + 0.01, 0.0)  # wrong profile
    r = ak.separation_residuals(bundle, ambitoric_points[0], A, A)
    assert r["profile_x"] > 1e-4


def test_fit_profiles_tables(ambitoric_model, bundle, ambitoric_points):
    fit = ak.fit_profiles(bundle, ambitoric_points, bins=4)
    for z, v in fit["A_fit"]["table"]:
        assert abs(v - ambitoric_model.spec.A.value(z)) < 0.2


def test_momenta_and_poisson(bundle, ambitoric_points):
    for p in ambitoric_points:
        assert ak.momentum_residual(bundle, bundle.data, p) < 1e-9
        assert max(ak.poisson_residuals(bundle, bundle.data, p).values()) < 1e-10
    # negative control: opposite sign convention
    p = ambitoric_points[0]
    flipped = {k: -v for k, v in ak.momenta(bundle, p).items()}
    assert ak.momentum_residual(bundle, bundle.data, p, flipped) > 1e-4


def test_classifier_ambitoric(ambitoric_model, ambitoric_points):
    label = ak.classify_case(ambitoric_model.geo, ambitoric_model.psi, ambitoric_points)
    assert label.kind == "ambitoric"


def test_zero_locus_guard(sphere_model):
    b = ak.build_bundle(sphere_model.geo, sphere_model.psi, margin=10.0)
    with pytest.raises(DomainError, match="zero locus"):
        b.f_plus([0.2] * 4)
