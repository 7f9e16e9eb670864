"""Calabi-type local model in coordinates ``(u, v, t, s)``.

A curve chart ``g_Sigma = rho^2 (du^2 + dv^2)`` with a primitive ``theta`` of
``omega_Sigma = rho^2 du ^ dv``, ``d^c t = ds + theta`` and

    g_phi   = phi g_Sigma + phi' (dt^2 + (d^c t)^2)
    g^(k)   = g_phi / (1 + k phi)^2
    psi^(k) = phi/(1+k phi)^2 omega_Sigma + (1 - k phi) phi'/(1+k phi)^3 dt ^ d^c t

The coordinate coframe is direct: ``omega_phi`` is self-dual in it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .. import jets
from .. import riemann as rm
from ..chart import Constraint, ConstructionError, Domain, DomainError, Field
from ..jets import Jet
from ..riemann import Geometry
from .profiles import Profile, TanhShift

U, V, T, S = 0, 1, 2, 3
THETA_TOL = 1e-9


def flat_curve(u: Jet, v: Jet):
    """``rho = 1``, ``theta = u dv``."""
    return 0.0 * u + 1.0, (0.0 * u, u)


def round_curve(u: Jet, v: Jet):
    """Unit round sphere in a stereographic chart: ``rho = 2/(1+r^2)``,
    ``theta = 2(u dv - v du)/(1+r^2)``."""
    q = 1.0 + u * u + v * v
    return 2.0 / q, (-2.0 * v / q, 2.0 * u / q)


CURVES: dict[str, Callable] = {"flat": flat_curve, "round": round_curve}


@dataclass
class CalabiSpec:
    phi: Profile = None
    k: float = 0.0
    curve: str = "flat"
    u_range: tuple = (-0.5, 0.5)
    v_range: tuple = (-0.5, 0.5)
    t_range: tuple = (-1.0, 1.0)
    s_range: tuple = (-1.0, 1.0)
    margin: float = 1e-2

    def __post_init__(self):
        if self.phi is None:
            self.phi = TanhShift()
        if self.curve not in CURVES:
            raise ConstructionError(f"unknown curve {self.curve!r}; choose from {sorted(CURVES)}")


@dataclass
class CalabiModel:
    spec: CalabiSpec
    domain: Domain
    geo: Geometry
    psi: Field
    g_phi: Field
    omega_phi: Field
    K: Field

    def f_closed_form(self, p) -> tuple[float, float]:
        ph = self.spec.phi.value(float(p[T]))
        k = self.spec.k
        return 1.0 / abs(1 + k * ph), abs(k) * ph / abs(1 + k * ph)


def _curve_data(spec: CalabiSpec, p):
    u, v, t, s = jets.seed(p)
    rho, (tu, tv) = CURVES[spec.curve](u, v)
    return u, v, t, s, rho, tu, tv


def theta_residual(spec: CalabiSpec, p) -> float:
    """``|d theta - rho^2 du^dv|`` (coordinate components)."""
    _, _, _, _, rho, tu, tv = _curve_data(spec, p)
    dth = tv.g[U] - tu.g[V]
    return abs(float(dth) - float((rho * rho).v))


def _check(spec: CalabiSpec, dom: Domain) -> None:
    ph = spec.phi
    ts = np.linspace(*spec.t_range, 401)
    vals = np.array([ph.derivs(t, 1) for t in ts])
    if np.any(vals[:, 0] <= 0) or np.any(vals[:, 1] <= 0):
        raise ConstructionError("phi must be positive and increasing on the t-interval")
    cross = 1 + spec.k * vals[:, 0]
    if np.any(cross > 0) and np.any(cross < 0):
        raise DomainError("1 + k phi changes sign inside the t-interval")
    corners = [np.array([u, v, 0.0, 0.0]) for u in spec.u_range for v in spec.v_range]
    corners.append(np.array([np.mean(spec.u_range), np.mean(spec.v_range), 0.0, 0.0]))
    worst = max(theta_residual(spec, c) for c in corners)
    if worst > THETA_TOL:
        raise ConstructionError(f"theta is not a primitive of omega_Sigma (defect {worst:.3g})")


def build_calabi(spec: CalabiSpec) -> CalabiModel:
    k = spec.k
    phi = spec.phi
    cons = (Constraint("|1 + k phi|", lambda p: abs(1 + k * phi.value(p[T]))),)
    dom = Domain((spec.u_range, spec.v_range, spec.t_range, spec.s_range), spec.margin, cons)
    _check(spec, dom)
    e = np.eye(4)

    def pieces(p):
        u, v, t, s, rho, tu, tv = _curve_data(spec, p)
        z = 0.0 * t
        dct = jets.stack([tu, tv, z, z + 1.0])  # d^c t = ds + theta
        dt = Jet.const(e[T])
        return phi(t), phi.prime()(t), rho * rho, dct, dt

    def g_phi(p):
        ph, ph1, r2, dct, dt = pieces(p)
        base = jets.einsum("ij,->ij", np.diag([1.0, 1.0, 0.0, 0.0]), ph * r2)
        return base + ph1 * (jets.einsum("i,j->ij", dt, dt) + jets.einsum("i,j->ij", dct, dct))

    def omega_sigma(r2):
        area = np.zeros((4, 4))
        area[U, V], area[V, U] = 1.0, -1.0
        return jets.einsum("ij,->ij", area, r2)

    def omega_phi(p):
        ph, ph1, r2, dct, dt = pieces(p)
        return ph * omega_sigma(r2) + ph1 * rm.wedge11(dt, dct)

    def metric(p):
        ph = phi(jets.seed(p)[T])
        c = 1.0 + k * ph
        return g_phi(p) / (c * c)

    def psi(p):
        ph, ph1, r2, dct, dt = pieces(p)
        c = 1.0 + k * ph
        return ph / (c * c) * omega_sigma(r2) + (1.0 - k * ph) * ph1 / (c * c * c) * rm.wedge11(dt, dct)

    geo = Geometry(Field(metric, dom, "metric", f"g^({k:g})"), 1, dom, "calabi")
    return CalabiModel(
        spec, dom, geo,
        Field(psi, dom, "twoform", f"psi^({k:g})"),
        Field(g_phi, dom, "metric", "g_phi"),
        Field(omega_phi, dom, "twoform", "omega_phi"),
        Field(lambda p: Jet.const(e[S]), dom, "vector", "d/ds"),
    )


def dct_checks(model: CalabiModel, p) -> dict:
    """Sanity checks of the chosen ``d^c t``: ``d d^c t = omega_Sigma`` and ``d^c t(K) = 1``."""
    e = np.eye(4)
    th = theta_residual(model.spec, p)
    u, v, t, s, rho, tu, tv = _curve_data(model.spec, p)
    dct = np.array([float(tu.v), float(tv.v), 0.0, 1.0])
    return {"dd^c t": th, "d^c t(K)": abs(dct @ model.K(p).v - 1.0), "K": float(np.abs(model.K(p).v - e[S]).max())}


def kahler_pair_residual(model: CalabiModel, p) -> float:
    """``|nabla omega_phi|`` for ``g_phi`` (the ``k = 0`` Kahler pair)."""
    g0 = Geometry(model.g_phi, 1, model.domain, "g_phi")
    D = rm.covariant_derivative(g0, p, model.omega_phi(p), "dd").v
    return rm.frame_norm(g0, p, D, "ddd")


def expected_subcase(spec: CalabiSpec) -> tuple[str, float]:
    """Constant combination of ``f+-`` and its value for this ``k``.

    ``f+ = 1/|1+k phi|`` and ``f- = |k| phi/|1+k phi|``: for ``1 + k phi > 0``
    and ``k > 0`` the sum is 1; for ``k < 0`` the difference ``f+ - f-`` is 1;
    for ``1 + k phi < 0`` (so ``k < 0``) ``f- - f+ = 1``.
    """
    ph = spec.phi.value(0.5 * sum(spec.t_range))
    if spec.k > 0:
        return "f+ + f-", 1.0
    if 1 + spec.k * ph > 0:
        return "f+ - f-", 1.0
    return "f- - f+", 1.0
