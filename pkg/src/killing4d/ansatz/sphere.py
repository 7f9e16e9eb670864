"""Round 4-sphere in the stereographic chart, and its ambitoric deformations.

The chart ``w in R^4`` maps to ``u = ((1 - r^2), 2w) / (1 + r^2)`` (projection
from ``-e0``), so ``w = 0`` is ``u = e0`` and ``g = 4/(1+r^2)^2 delta``.  The
coordinate coframe is direct for the orientation ``u -| (e0^e1^e2^e3^e4)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .. import jets
from .. import riemann as rm
from ..chart import Constraint, ConstructionError, Domain, DomainError, Field
from ..jets import Jet
from ..riemann import Geometry
from .ambitoric import AmbitoricModel, ProfilePair, build_hyperbolic_ambitoric
from .profiles import Bump, Profile, Sum, min_on, sphere_profiles


@dataclass
class SphereSpec:
    lam: float
    mu: float
    box: tuple = ((0.05, 0.45),) * 4
    margin: float = 1e-2
    # deformation (ambitoric chart only)
    eps_A: float = 0.0
    eps_B: float = 0.0
    collar: float = 0.05

    def __post_init__(self):
        if not (0 <= self.lam <= self.mu and self.mu > 0):
            raise ConstructionError("sphere data needs 0 <= lambda <= mu and mu > 0")


def embedding(w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    r2 = float(w @ w)
    return np.concatenate([[(1 - r2) / (1 + r2)], 2 * w / (1 + r2)])


@lru_cache(maxsize=8192)
def _embedding_jets(p: tuple):
    """``(w, q, dU)``: the chart point as a vector jet, ``q = 1 + r^2`` and
    ``dU[i, j] = d_j U_{i+1} = 2 delta_ij / q - 4 w_i w_j / q^2``."""
    w = jets.stack(jets.seed(p))
    q = 1.0 + jets.einsum("i,i->", w, w)
    iq = 1.0 / q
    dU = jets.einsum("ij,->ij", 2.0 * np.eye(4), iq) - jets.einsum("i,j,->ij", w, w, 4.0 * iq * iq)
    return w, q, dU


@dataclass
class SphereModel:
    spec: SphereSpec
    domain: Domain
    geo: Geometry
    psi: Field
    u: Field = field(repr=False, default=None)

    def f_closed_form(self, p) -> tuple[float, float]:
        return sphere_f(self.spec.lam, self.spec.mu, embedding(p))


def sphere_f(lam: float, mu: float, u) -> tuple[float, float]:
    """Closed-form ``f+-`` on the sphere at ``u``."""
    u = np.asarray(u, dtype=float)
    r12 = u[1] ** 2 + u[2] ** 2
    fp = 0.5 * np.sqrt(max((lam + mu * u[0]) ** 2 + (mu**2 - lam**2) * r12, 0.0))
    fm = 0.5 * np.sqrt(max((lam - mu * u[0]) ** 2 + (mu**2 - lam**2) * r12, 0.0))
    return float(fp), float(fm)


def build_round_sphere(spec: SphereSpec) -> SphereModel:
    lam, mu = spec.lam, spec.mu

    def slack_fp(p):
        return sphere_f(lam, mu, embedding(p))[0]

    def slack_fm(p):
        return sphere_f(lam, mu, embedding(p))[1]

    cons = [Constraint("f+", slack_fp), Constraint("f-", slack_fm)]
    dom = Domain(spec.box, spec.margin, tuple(cons))

    def metric(p):
        _, q, _ = _embedding_jets(p)
        return jets.einsum("ij,->ij", np.eye(4), 4.0 / (q * q))

    def psi(p):
        _, _, dU = _embedding_jets(p)
        return lam * rm.wedge11(dU[0], dU[1]) + mu * rm.wedge11(dU[2], dU[3])

    def u_field(p):
        w, q, _ = _embedding_jets(p)
        u0 = (2.0 - q) / q
        return jets.stack([u0] + [2.0 * w[i] / q for i in range(4)])

    geo = Geometry(Field(metric, dom, "metric", "g_round"), 1, dom, "sphere")
    return SphereModel(spec, dom, geo, Field(psi, dom, "twoform", "psi_a"), Field(u_field, dom, "vector", "u"))


def xyu_residuals(spec: SphereSpec, x: float, y: float, u) -> dict:
    """The three identities expressing ``u0``, ``u1^2+u2^2``, ``u3^2+u4^2`` in ``x, y``."""
    lam, mu = spec.lam, spec.mu
    if lam == mu or lam == 0:
        raise DomainError("these identities need 0 < lambda < mu")
    u = np.asarray(u, dtype=float)
    return {
        "u0": abs(u[0] - 4 * x * y / (lam * mu)),
        "u12": abs(u[1] ** 2 + u[2] ** 2 - (lam**2 - 4 * x * x) * (lam**2 - 4 * y * y) / (lam**2 * (lam**2 - mu**2))),
        "u34": abs(u[3] ** 2 + u[4] ** 2 - (mu**2 - 4 * x * x) * (mu**2 - 4 * y * y) / (mu**2 * (mu**2 - lam**2))),
    }


def sphere_profile_pair(spec: SphereSpec, s_range=(-1.0, 1.0), t_range=(-1.0, 1.0)) -> ProfilePair:
    """Ambitoric data of the round sphere on the rectangle ``(lam/2, mu/2) x (0, lam/2)``."""
    if not 0 < spec.lam < spec.mu:
        raise ConstructionError("the ambitoric sphere chart needs 0 < lambda < mu")
    A, B = sphere_profiles(spec.lam, spec.mu)
    return ProfilePair(A, B, (spec.lam / 2, spec.mu / 2), (0.0, spec.lam / 2), s_range, t_range, spec.margin)


def deformed_profiles(spec: SphereSpec) -> tuple[Profile, Profile]:
    """``A + eps_A bump``, ``B + eps_B bump`` with bumps vanishing on a boundary collar."""
    A, B = sphere_profiles(spec.lam, spec.mu)
    lo, hi = spec.lam / 2, spec.mu / 2
    c = spec.collar
    At, Bt = A, B
    if spec.eps_A:
        At = Sum(A, Bump(lo + c, hi - c), spec.eps_A)
    if spec.eps_B:
        Bt = Sum(B, Bump(-spec.lam / 2 + c, spec.lam / 2 - c), spec.eps_B)
    return At, Bt


def build_deformed_sphere(spec: SphereSpec, s_range=(-1.0, 1.0), t_range=(-1.0, 1.0)) -> AmbitoricModel:
    """Ambitoric metric with deformed profiles; ``psi`` is unchanged."""
    base = sphere_profile_pair(spec, s_range, t_range)
    c = spec.collar
    if spec.lam / 2 + c >= spec.mu / 2 - c or c >= spec.lam / 2:
        raise ConstructionError("collar leaves no room for a deformation")
    At, Bt = deformed_profiles(spec)
    for name, prof, (lo, hi) in (("A~", At, base.x_range), ("B~", Bt, (-spec.lam / 2, spec.lam / 2))):
        m = min_on(prof, lo + c, hi - c)
        if not m > 0:
            raise ConstructionError(f"deformed profile {name} loses positivity (min {m:.3g})")
    return build_hyperbolic_ambitoric(ProfilePair(At, Bt, base.x_range, base.y_range, s_range, t_range, spec.margin))


def breaking_eps(spec: SphereSpec) -> float:
    """Most negative ``eps_A`` keeping ``A + eps_A bump`` positive on the bump support."""
    A, _ = sphere_profiles(spec.lam, spec.mu)
    lo, hi = spec.lam / 2 + spec.collar, spec.mu / 2 - spec.collar
    bump = Bump(lo, hi)
    zs = [z for z in np.linspace(lo, hi, 4001) if bump.value(z) > 1e-8]
    return -float(min(A.value(z) / bump.value(z) for z in zs))
