import numpy as np
import pytest
import sympy as sp

from killing4d import jets
from killing4d import riemann as rm
from killing4d.chart import Domain, Field, NumericalError, coordinate_field, fd_oracle, sample_points
from killing4d.riemann import Geometry
from conftest import BOX, diag_metric, metric_field

# ---------------------------------------------------------------------------
# sympy oracle: symbolic metric derivatives, curvature assembled in numpy with
# the textbook formulas (independent of the jet code path)
# ---------------------------------------------------------------------------

C = sp.symbols("c0:4")


def _sym_metric():
    c0, c1, c2, c3 = C
    return sp.Matrix([
        [1 + c1**2, sp.Rational(1, 5) * c2, 0, sp.Rational(1, 10) * c0 * c3],
        [sp.Rational(1, 5) * c2, sp.exp(c0 / 2), sp.Rational(1, 10) * c3, 0],
        [0, sp.Rational(1, 10) * c3, 2 + sp.sin(c1), sp.Rational(1, 10) * c1],
        [sp.Rational(1, 10) * c0 * c3, 0, sp.Rational(1, 10) * c1, 1 + c0**2 + c2**2],
    ])


G_SYM = _sym_metric()
_g = sp.lambdify(C, G_SYM, "numpy")
_dg = sp.lambdify(C, [[[sp.diff(G_SYM[i, j], C[k]) for k in range(4)] for j in range(4)] for i in range(4)], "numpy")
_ddg = sp.lambdify(C, [[[[sp.diff(G_SYM[i, j], C[k], C[l]) for l in range(4)] for k in range(4)]
                        for j in range(4)] for i in range(4)], "numpy")


def oracle_curvature(p):
    g = np.array(_g(*p), float)
    dg = np.array(_dg(*p), float)  # dg[i,j,k] = d_k g_ij
    ddg = np.array(_ddg(*p), float)
    gi = np.linalg.inv(g)
    # Gamma^k_ij = 1/2 g^kl (d_i g_lj + d_j g_li - d_l g_ij)
    low = 0.5 * (np.einsum("lji->lij", dg) + np.einsum("lij->lij", dg) - np.einsum("ijl->lij", dg))
    Gam = np.einsum("kl,lij->kij", gi, low)
    dlow = 0.5 * (np.einsum("ljim->lijm", ddg) + np.einsum("lijm->lijm", ddg) - np.einsum("ijlm->lijm", ddg))
    dgi = -np.einsum("ka,abm,bl->klm", gi, dg, gi)
    dGam = np.einsum("klm,lij->kijm", dgi, low) + np.einsum("kl,lijm->kijm", gi, dlow)
    # R^a_bcd = d_c Gam^a_db - d_d Gam^a_cb + Gam^a_ce Gam^e_db - Gam^a_de Gam^e_cb
    R = (np.einsum("adbc->abcd", dGam) - np.einsum("acbd->abcd", dGam)
         + np.einsum("ace,edb->abcd", Gam, Gam) - np.einsum("ade,ecb->abcd", Gam, Gam))
    ric = np.einsum("abad->bd", R)
    return Gam, ric, float(np.einsum("bd,bd->", gi, ric))


def _oracle_geo():
    def fn(c):
        c0, c1, c2, c3 = c
        z = 0.0 * c0
        return jets.array([
            [1 + c1 * c1, 0.2 * c2, z, 0.1 * c0 * c3],
            [0.2 * c2, jets.exp(0.5 * c0), 0.1 * c3, z],
            [z, 0.1 * c3, 2 + jets.sin(c1), 0.1 * c1],
            [0.1 * c0 * c3, z, 0.1 * c1, 1 + c0 * c0 + c2 * c2],
        ])
    return Geometry(metric_field(fn, BOX), 1, BOX, "generic")


@pytest.fixture(scope="module")
def generic():
    return _oracle_geo()


def test_christoffel_and_scal_match_symbolic_oracle(generic):
    for p in sample_points(BOX, 8, seed=2):
        Gam, ric, scal = oracle_curvature(p)
        assert np.allclose(rm.christoffel(generic, p), Gam, atol=1e-12)
        cp = rm.curvature(generic, p)
        assert np.allclose(cp.ricci_form, ric, atol=1e-10)
        assert abs(cp.scal - scal) < 1e-10


def test_conformal_christoffel_example():
    # g = exp(2 c0) delta: Gamma^0_00 = 1, Gamma^0_11 = -1, Gamma^1_01 = 1
    geo = Geometry(metric_field(diag_metric(lambda c: [jets.exp(2 * c[0])] * 4), BOX), 1, BOX)
    G = rm.christoffel(geo, [0.1, 0.2, 0.3, 0.4])
    assert np.isclose(G[0, 0, 0], 1.0) and np.isclose(G[0, 1, 1], -1.0) and np.isclose(G[1, 0, 1], 1.0)


def _s2xs2():
    def conf(a, b):
        q = 1 + a * a + b * b
        return 4.0 / (q * q)
    return Geometry(metric_field(diag_metric(lambda c: [conf(c[0], c[1])] * 2 + [conf(c[2], c[3])] * 2), BOX),
                    1, BOX, "S2xS2")


def test_product_of_unit_spheres_has_scal_4():
    geo = _s2xs2()
    for p in sample_points(BOX, 5, seed=1):
        assert abs(rm.scalar_curvature(geo, p) - 4.0) < 1e-10


def test_round_sphere_scal_12(sphere_model, sphere_points):
    for p in sphere_points:
        assert abs(rm.scalar_curvature(sphere_model.geo, p) - 12.0) < 1e-9
        assert rm.bianchi_residual(sphere_model.geo, p) < 1e-10


def test_conformal_change_of_scalar_curvature():
    # g~ = phi^-2 g: Scal~ = phi^2 Scal - 6 phi Delta phi - 12 |d phi|^2
    base = _s2xs2()
    phi_fn = lambda c: 2.0 + c[0] * c[1] + 0.5 * jets.sin(c[2]) + 0.3 * c[3] * c[3]
    phi = coordinate_field(phi_fn, BOX)
    tilde = Geometry(Field(lambda p: base.g(p) / (phi(p) * phi(p)), BOX, "metric"), 1, BOX)
    for p in sample_points(BOX, 5, seed=4):
        f = phi(p)
        grad2 = float(f.g @ base.ginv(p).v @ f.g)
        lap = float(rm.laplacian(base, p, f).v)
        expect = f.v**2 * rm.scalar_curvature(base, p) - 6 * f.v * lap - 12 * grad2
        assert abs(rm.scalar_curvature(tilde, p) - expect) < 1e-9


def test_flat_laplacian_sign(flat_geo):
    f = coordinate_field(lambda c: c[0] * c[0], BOX)
    assert np.isclose(rm.laplacian(flat_geo, [0.1, 0.2, 0.3, 0.4], f([0.1, 0.2, 0.3, 0.4])).v, -2.0)


def test_laplacian_matches_divergence_formula(generic):
    # Delta f = -|g|^-1/2 d_i (|g|^1/2 g^ij d_j f), evaluated with the FD oracle
    f = coordinate_field(lambda c: jets.sin(c[0]) * c[1] + c[2] * c[3] * c[3], BOX)

    def flux(p):
        fj, g = f(p), generic.g(p)
        gi = jets.inv(g)
        return jets.sqrt(jets.det(g)).truncate(1) * jets.einsum("ij,j->i", gi.truncate(1), fj.d())

    flux_field = Field(flux, BOX, "vector")
    for p in sample_points(BOX, 3, seed=9):
        div = np.trace(fd_oracle(flux_field, p, 1))
        expect = -div / np.sqrt(np.linalg.det(generic.g(p).v))
        assert abs(float(rm.laplacian(generic, p, f(p)).v) - expect) < 1e-8


def test_metric_is_parallel(generic):
    p = [0.1, -0.2, 0.3, 0.05]
    assert np.max(np.abs(rm.covariant_derivative(generic, p, generic.g(p), "dd").v)) < 1e-12


def test_bianchi_generic(generic):
    assert rm.bianchi_residual(generic, [0.2, 0.1, -0.1, 0.3]) < 1e-10


def test_d_squared_vanishes():
    f1 = coordinate_field(lambda c: jets.stack([c[1] * c[2], jets.sin(c[0] * c[3]), c[0] ** 3, jets.exp(c[1])]),
                          BOX, "oneform")
    dd = rm.exterior_derivative(rm.exterior_derivative(f1([0.1, 0.2, 0.3, 0.4])))
    assert np.max(np.abs(dd.v)) < 1e-13


def test_exterior_derivative_example():
    # d(c0 dc1) = dc0 ^ dc1
    z = lambda c: 0.0 * c[0]
    a = coordinate_field(lambda c: jets.stack([z(c), c[0], z(c), z(c)]), BOX, "oneform")
    w = rm.exterior_derivative(a([0.1, 0.2, 0.3, 0.4])).v
    E = np.zeros((4, 4)); E[0, 1], E[1, 0] = 1, -1
    assert np.allclose(w, E)


def _e(i, j):
    m = np.zeros((4, 4)); m[i, j], m[j, i] = 1.0, -1.0
    return m


def test_hodge_star_examples(flat_geo):
    p = [0.0] * 4
    assert np.allclose(rm.hodge_star_2(flat_geo, p, _e(0, 1)), _e(2, 3))
    assert np.allclose(rm.hodge_star_2(flat_geo, p, _e(0, 2)), -_e(1, 3))
    rev = Geometry(flat_geo.metric, -1, BOX)
    assert np.allclose(rm.hodge_star_2(rev, p, _e(0, 1)), -_e(2, 3))


def test_hodge_star_is_an_involution(generic):
    p = [0.1, 0.2, -0.1, 0.2]
    w = np.random.default_rng(0).normal(size=(4, 4)); w = w - w.T
    assert np.allclose(rm.hodge_star_2(generic, p, rm.hodge_star_2(generic, p, w)), w, atol=1e-12)
    plus, minus = rm.sd_asd_split(generic, p, w)
    assert np.allclose(rm.hodge_star_2(generic, p, plus), plus, atol=1e-12)
    assert np.allclose(rm.hodge_star_2(generic, p, minus), -minus, atol=1e-12)


def test_musical_round_trip_and_endomorphisms(generic):
    p = [0.1, 0.2, -0.1, 0.2]
    v = np.array([1.0, -2.0, 0.5, 0.3])
    assert np.allclose(rm.sharp(generic, p, rm.flat(generic, p, v)), v)
    w = np.random.default_rng(1).normal(size=(4, 4)); w = w - w.T
    E = rm.endo_of_2form(generic, p, w)
    assert np.allclose(rm.form_of_endo(generic, p, E), w)
    assert np.isclose(rm.endo_inner(E, E), rm.form_inner(generic, p, w, w))


def test_flat_kahler_form_has_unit_norm(flat_geo):
    w = _e(0, 1) + _e(2, 3)
    J = rm.endo_of_2form(flat_geo, [0] * 4, w)
    assert np.allclose(J @ J, -np.eye(4))
    assert np.isclose(rm.endo_inner(J, J), 2.0)
    assert np.isclose(rm.form_norm(flat_geo, [0] * 4, _e(0, 1)), 1.0)


def test_lie_derivative_rotation_is_killing(flat_geo):
    K = coordinate_field(lambda c: jets.stack([-c[1], c[0], 0 * c[0], 0 * c[0]]), BOX, "vector")
    p = [0.1, 0.2, 0.3, 0.4]
    assert np.max(np.abs(rm.lie_derivative_metric(flat_geo, p, K(p)).v)) < 1e-14


def test_lie_derivative_matches_coordinate_formula(generic):
    K = coordinate_field(lambda c: jets.stack([c[1] * c[1], jets.sin(c[0]), c[3], c[0] * c[2]]), BOX, "vector")
    p = np.array([0.1, 0.2, 0.3, 0.4])
    g, k = generic.g(p).v, K(p).v
    dg = fd_oracle(generic.metric, p, 1)
    dK = fd_oracle(K, p, 1)
    expect = np.einsum("l,ijl->ij", k, dg) + np.einsum("lj,li->ij", g, dK) + np.einsum("il,lj->ij", g, dK)
    L = rm.lie_derivative_metric(generic, p, K(p)).v
    assert np.allclose(L, expect, atol=1e-9)
    assert np.max(np.abs(L)) > 1e-2


def test_lie_bracket_example():
    X = coordinate_field(lambda c: jets.stack([1 + 0 * c[0], 0 * c[0], 0 * c[0], 0 * c[0]]), BOX, "vector")
    Y = coordinate_field(lambda c: jets.stack([0 * c[0], c[0], 0 * c[0], 0 * c[0]]), BOX, "vector")
    p = [0.1, 0.2, 0.3, 0.4]
    assert np.allclose(rm.lie_bracket(X(p), Y(p)).v, [0, 1, 0, 0])


def _rotated_J(angle):
    J0 = np.zeros((4, 4)); J0[1, 0], J0[0, 1], J0[3, 2], J0[2, 3] = 1, -1, 1, -1

    def fn(c):
        th = angle(c)
        co, si = jets.cos(th), jets.sin(th)
        z, one = 0.0 * th, 0.0 * th + 1.0
        R = jets.array([[one, z, z, z], [z, co, -si, z], [z, si, co, z], [z, z, z, one]])
        Rt = jets.array([[one, z, z, z], [z, co, si, z], [z, -si, co, z], [z, z, z, one]])
        return jets.einsum("ij,jk,kl->il", R, J0, Rt)
    return fn


def test_nijenhuis_zero_for_constant_J():
    J = coordinate_field(_rotated_J(lambda c: 0.0 * c[0] + 0.3), BOX, "endo")
    assert np.max(np.abs(rm.nijenhuis(J([0.1] * 4)).v)) < 1e-14


def test_nijenhuis_detects_non_integrable_J():
    # negative control: J rotated by an angle depending on the point
    J = coordinate_field(_rotated_J(lambda c: c[0] + c[3]), BOX, "endo")
    p = [0.1, 0.2, 0.3, 0.4]
    assert np.allclose(J(p).v @ J(p).v, -np.eye(4))
    assert np.max(np.abs(rm.nijenhuis(J(p)).v)) > 1e-1


def test_nijenhuis_rejects_non_complex_structure():
    J = coordinate_field(lambda c: jets.array([[c[0] * 0 + 1.0 if i == j else 0 * c[0] for j in range(4)]
                                               for i in range(4)]), BOX, "endo")
    with pytest.raises(rm.InputError):
        rm.nijenhuis(J([0.1] * 4))


def test_ill_conditioned_metric_raises():
    geo = Geometry(metric_field(diag_metric(lambda c: [1.0 + 0 * c[0]] * 3 + [1e-10 + 0 * c[0]]), BOX), 1, BOX)
    with pytest.raises(NumericalError):
        geo.frame([0.0] * 4)


def test_slot_mismatch_rejected(flat_geo):
    with pytest.raises(rm.InputError):
        rm.covariant_derivative(flat_geo, [0] * 4, flat_geo.g([0] * 4), "d")
