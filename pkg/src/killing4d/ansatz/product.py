"""Decomposable case: ``g = phi^2 (g_Sigma + g_Sigma~)``, ``psi = phi^3 omega_Sigma``.

Chart ``(u, v, p, q)`` with ``(u, v)`` on the first curve, ``(p, q)`` on the
second, each carrying a conformally flat metric ``rho^2 (d.^2 + d.^2)``.
``phi`` depends on ``(u, v)`` only.  The coordinate coframe is direct.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .. import jets
from ..chart import Constraint, ConstructionError, Domain, Field
from ..jets import Jet
from ..riemann import Geometry
from .calabi import CURVES

U, V, P, Q = 0, 1, 2, 3


def _default_phi(u: Jet, v: Jet) -> Jet:
    return 2.0 + u


@dataclass
class ProductSpec:
    phi: Callable = field(default=_default_phi)
    curve1: str = "flat"
    curve2: str = "flat"
    u_range: tuple = (-0.5, 0.5)
    v_range: tuple = (-0.5, 0.5)
    p_range: tuple = (-0.5, 0.5)
    q_range: tuple = (-0.5, 0.5)
    margin: float = 1e-2

    def __post_init__(self):
        for c in (self.curve1, self.curve2):
            if c not in CURVES:
                raise ConstructionError(f"unknown curve {c!r}; choose from {sorted(CURVES)}")


@dataclass
class ProductModel:
    spec: ProductSpec
    domain: Domain
    geo: Geometry
    psi: Field
    star_psi: Field
    alpha: Field
    phi: Field


def build_product(spec: ProductSpec) -> ProductModel:
    phi_fn = spec.phi

    def phi_at(p) -> float:
        return float(jets.as_jet(phi_fn(*[Jet.const(float(c), 0) for c in p[:2]])).v)

    dom = Domain((spec.u_range, spec.v_range, spec.p_range, spec.q_range), spec.margin,
                 (Constraint("phi", phi_at),))

    def parts(p):
        u, v, pp, qq = jets.seed(p)
        r1, _ = CURVES[spec.curve1](u, v)
        r2, _ = CURVES[spec.curve2](pp, qq)
        return jets.as_jet(phi_fn(u, v)), r1 * r1, r2 * r2

    def metric(p):
        ph, a, b = parts(p)
        ph2 = ph * ph
        z = 0.0 * ph
        d = [ph2 * a, ph2 * a, ph2 * b, ph2 * b]
        return jets.array([[d[i] if i == j else z for j in range(4)] for i in range(4)])

    def area(i, j, c):
        m = np.zeros((4, 4))
        m[i, j], m[j, i] = 1.0, -1.0
        return jets.einsum("ij,->ij", m, c)

    def psi(p):
        ph, a, _ = parts(p)
        return area(U, V, ph * ph * ph * a)

    def star_psi(p):
        ph, _, b = parts(p)
        return area(P, Q, ph * ph * ph * b)

    def phi_field(p):
        return parts(p)[0]

    def alpha(p):
        # -*_Sigma dphi with *du = dv, *dv = -du; its g-dual is
        # -phi^-2 (*_Sigma dphi)^#Sigma
        dph = phi_field(p).d()
        z = 0.0 * dph[0]
        return jets.stack([dph[1], -dph[0], z, z])

    geo = Geometry(Field(metric, dom, "metric", "g"), 1, dom, "product")
    return ProductModel(
        spec, dom, geo,
        Field(psi, dom, "twoform", "phi^3 omega_Sigma"),
        Field(star_psi, dom, "twoform", "phi^3 omega_Sigma~"),
        Field(alpha, dom, "oneform", "alpha (closed form)"),
        Field(phi_field, dom, "scalar", "phi"),
    )
