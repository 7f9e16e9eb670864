"""Killing, *-Killing and conformal-Killing residuals; the Killing data of a 2-form.

Residuals are point-wise.  Tensor defects are measured as Frobenius norms in
the g-orthonormal frame of :meth:`Geometry.frame`, which makes tolerances
independent of the chart.  For a derivative ``nabla_X psi`` the reported value
is the maximum over the frame vectors ``X = e_a``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import jets
from . import riemann as rm
from .chart import DIM, Field
from .jets import Jet
from .riemann import Geometry

N_DIRECTIONS = 32
DIRECTION_SEED = 20240611


@dataclass
class KillingResidual:
    value: float
    breakdown: dict = field(default_factory=dict)

    def __float__(self) -> float:
        return self.value


@dataclass
class KillingData:
    """Fields attached to a *-Killing candidate ``psi``.

    ``alpha = delta psi / 3``, ``K1 = -alpha^#/2``,
    ``K2 = Phi(grad F)/8`` with ``F = f+^2 - f-^2``, ``S = -Phi o Phi / 2``.
    """

    geo: Geometry
    psi: Field
    psi_plus: Field
    psi_minus: Field
    Psi_plus: Field
    Psi_minus: Field
    fsq_plus: Field
    fsq_minus: Field
    alpha: Field
    K1: Field
    K2: Field
    Phi: Field
    S: Field


def _frame_sup(geo, p, D: np.ndarray) -> float:
    """Max over frame vectors ``e_a`` of the 2-form norm of ``D[..., a]``."""
    C = rm.frame_components(geo, p, D, "ddd")
    per = np.sqrt(0.5 * np.sum(C * C, axis=(0, 1)))
    return float(np.max(per))


def alpha_of(geo: Geometry, psi: Field) -> Field:
    """``alpha = delta psi / 3`` as a 1-form field."""
    return Field(lambda p: rm.codifferential_2form(geo, p, psi(p)) / 3.0,
                 psi.domain, "oneform", "alpha")


def _alpha_wedge_X(geo, p, alpha: np.ndarray) -> np.ndarray:
    """``T[i, j, k] = (alpha ^ d_k^flat)_ij = alpha_i g_kj - alpha_j g_ki``."""
    g = geo.g(p).v
    return np.einsum("i,kj->ijk", alpha, g) - np.einsum("j,ki->ijk", alpha, g)


def star_killing_defect(geo: Geometry, psi_jet: Jet, p) -> np.ndarray:
    N = rm.covariant_derivative(geo, p, psi_jet, "dd")
    alpha = rm.codifferential_2form(geo, p, psi_jet).v / 3.0
    return N.v - _alpha_wedge_X(geo, p, alpha)


def star_killing_residual(geo: Geometry, psi: Field, p) -> KillingResidual:
    """``max_a |nabla_{e_a} psi - alpha ^ e_a^flat|``."""
    psi_jet = psi(p)
    D = star_killing_defect(geo, psi_jet, p)
    val = _frame_sup(geo, p, D)
    closed = rm.form_norm3(geo, p, rm.exterior_derivative(psi_jet).v)
    return KillingResidual(val, {"nabla_defect": val, "d_psi": closed})


def conformal_killing_residual(geo: Geometry, psi: Field, p) -> KillingResidual:
    """``max_a |nabla_{e_a} psi - alpha ^ e_a^flat - e_a -| beta|`` with
    ``alpha = delta psi / 3``, ``beta = d psi / 3``."""
    psi_jet = psi(p)
    D = star_killing_defect(geo, psi_jet, p)
    beta = rm.exterior_derivative(psi_jet).v / 3.0
    D = D - np.einsum("kij->ijk", beta)
    val = _frame_sup(geo, p, D)
    return KillingResidual(val, {"nabla_defect": val})


def hodge_field(geo: Geometry, omega: Field) -> Field:
    return Field(lambda p: rm.hodge_star_2(geo, p, omega(p)), omega.domain, "twoform", "*" + omega.name)


def killing_2form_residual(geo: Geometry, phi2: Field, p) -> KillingResidual:
    """A 2-form is Killing iff its Hodge dual is *-Killing."""
    star = hodge_field(geo, phi2)
    res = star_killing_residual(geo, star, p)
    D = rm.covariant_derivative(geo, p, phi2(p), "dd").v
    skew = D + np.einsum("ikj->ijk", D)
    res.breakdown["antisymmetry"] = _frame_sup(geo, p, skew)
    return res


def killing_vector_residual(geo: Geometry, K: Field, p) -> float:
    return rm.frame_norm(geo, p, rm.lie_derivative_metric(geo, p, K(p)).v, "dd")


def unit_directions(n: int = N_DIRECTIONS, seed: int = DIRECTION_SEED) -> np.ndarray:
    """Deterministic unit vectors in R^4 (rows), seeded and fixed."""
    v = np.random.default_rng(seed).normal(size=(n, DIM))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


_DIRS = unit_directions()


def killing_tensor_residual(geo: Geometry, S: Field, p) -> float:
    """``max_X |g((nabla_X S) X, X)|`` over the fixed unit directions."""
    N = rm.covariant_derivative(geo, p, S(p), "ud").v
    g = geo.g(p).v
    E = geo.frame(p)
    low = np.einsum("ai,ijk->ajk", g, N)
    X = _DIRS @ E.T
    vals = np.einsum("ajk,na,nj,nk->n", low, X, X, X)
    return float(np.max(np.abs(vals)))


def _pm_parts(geo, psi):
    plus = Field(lambda p: rm.sd_asd_split(geo, p, psi(p))[0], psi.domain, "twoform", "psi+")
    minus = Field(lambda p: rm.sd_asd_split(geo, p, psi(p))[1], psi.domain, "twoform", "psi-")
    return plus, minus


def build_killing_data(geo: Geometry, psi: Field) -> KillingData:
    dom = psi.domain
    psi_p, psi_m = _pm_parts(geo, psi)
    Pp = Field(lambda p: rm.endo_of_2form(geo, p, psi_p(p)), dom, "endo", "Psi+")
    Pm = Field(lambda p: rm.endo_of_2form(geo, p, psi_m(p)), dom, "endo", "Psi-")
    fsq_p = Pp.map(lambda A: 0.5 * rm.endo_inner(A, A), "scalar", "f+^2")
    fsq_m = Pm.map(lambda A: 0.5 * rm.endo_inner(A, A), "scalar", "f-^2")
    alpha = alpha_of(geo, psi)
    K1 = Field(lambda p: -0.5 * rm.sharp(geo, p, alpha(p)), dom, "vector", "K1")
    Phi = Field(lambda p: Pp(p) - Pm(p), dom, "endo", "Phi")

    def k2(p):
        F = fsq_p(p) - fsq_m(p)
        gradF = rm.sharp(geo, p, F.d())
        return 0.125 * jets.einsum("ij,j->i", Phi(p), gradF)

    K2 = Field(k2, dom, "vector", "K2")
    S = Phi.map(lambda A: -0.5 * jets.einsum("ij,jk->ik", A, A), "endo", "S")
    return KillingData(geo, psi, psi_p, psi_m, Pp, Pm, fsq_p, fsq_m, alpha, K1, K2, Phi, S)


def k2_relation_residual(geo: Geometry, data: KillingData, p) -> float:
    """``|K2 - S(K1)/2|_g``."""
    d = data.K2(p).v - 0.5 * data.S(p).v @ data.K1(p).v
    return rm.frame_norm(geo, p, d, "u")


def nabla_alpha_sharp(geo: Geometry, data: KillingData, p) -> np.ndarray:
    """Endomorphism ``X -> nabla_X alpha^#``."""
    a_sharp = Field(lambda q: rm.sharp(geo, q, data.alpha(q)), data.psi.domain, "vector")
    return rm.covariant_derivative(geo, p, a_sharp(p), "u").v


def s_eigenvalues(data: KillingData, p) -> np.ndarray:
    ev = np.linalg.eigvals(data.S(p).v)
    return np.sort(ev.real)


def vector_norm(geo: Geometry, p, v) -> float:
    return rm.frame_norm(geo, p, v, "u")
