"""Hyperbolic ambitoric Ansatz in coordinates ``(x, y, s, t)``.

``g = w (dx^2/A + dy^2/B) + A/w (ds + y^2 dt)^2 + B/w (ds + x^2 dt)^2`` with
``w = x^2 - y^2`` and ``psi = 2x dx ^ (ds + y^2 dt) + 2y dy ^ (ds + x^2 dt)``.

Orientation: the one induced by ``J+``, for which ``omega+`` is self-dual and
``f+ = x + y``.  In it ``dx ^ dy ^ ds ^ dt`` is negative, so the geometry
carries ``orientation=-1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .. import jets
from .. import riemann as rm
from ..chart import Constraint, ConstructionError, Domain, DomainError, Field, NumericalError
from ..jets import Jet
from ..riemann import Geometry
from .profiles import Profile

X, Y, S, T = 0, 1, 2, 3
ORIENTATION = -1


@dataclass
class ProfilePair:
    A: Profile
    B: Profile
    x_range: tuple
    y_range: tuple
    s_range: tuple = (-1.0, 1.0)
    t_range: tuple = (-1.0, 1.0)
    margin: float = 1e-2

    def domain(self) -> Domain:
        m = self.margin
        cons = (
            Constraint("x - |y|", lambda p: p[0] - abs(p[1])),
            Constraint("|y|", lambda p: abs(p[1])),
            Constraint("A(x)", lambda p: self.A.value(p[0])),
            Constraint("B(y)", lambda p: self.B.value(p[1])),
        )
        return Domain((self.x_range, self.y_range, self.s_range, self.t_range), m, cons)


def _antisym(entries: dict) -> Jet:
    rows = [[0.0] * 4 for _ in range(4)]
    for (i, j), v in entries.items():
        rows[i][j] = v
        rows[j][i] = -v
    return jets.array(rows)


def _sym(entries: dict) -> Jet:
    rows = [[0.0] * 4 for _ in range(4)]
    for (i, j), v in entries.items():
        rows[i][j] = v
        rows[j][i] = v
    return jets.array(rows)


def _rows(rows: list) -> Jet:
    """Matrix whose row ``a`` lists the coframe coefficients of a 1-form."""
    return jets.array(rows)


@dataclass
class AmbitoricModel:
    spec: ProfilePair
    domain: Domain
    geo: Geometry
    psi: Field
    J_plus: Field
    J_minus: Field
    tau: Field
    omega_plus: Field
    omega_minus: Field
    K1: Field
    K2: Field

    # closed-form scalar quantities (floats in, floats out)
    def scal(self, x: float, y: float) -> float:
        return scal_closed_form(self.spec, x, y)

    def b(self, x: float, y: float) -> float:
        return b_closed_form(self.spec, x, y)

    def h(self, x: float, y: float) -> tuple[float, float]:
        return h_closed_form(self.spec, x, y)


def check_positivity(spec: ProfilePair, n: int = 401) -> None:
    m = spec.margin
    for name, prof, (lo, hi) in (("A", spec.A, spec.x_range), ("B", spec.B, spec.y_range)):
        zs = np.linspace(lo + m, hi - m, n)
        vals = np.array([prof.value(z) for z in zs])
        if np.any(vals <= 0):
            bad = zs[np.argmin(vals)]
            raise ConstructionError(f"profile {name} is not positive on its interval: {name}({bad:.6g}) = {vals.min():.3g}")


def build_hyperbolic_ambitoric(spec: ProfilePair) -> AmbitoricModel:
    check_positivity(spec)
    dom = spec.domain()
    A, B = spec.A, spec.B

    def metric(p):
        x, y, s, t = jets.seed(p)
        w = x * x - y * y
        a, b = A(x), B(y)
        ca, cb = a / w, b / w
        y2, x2 = y * y, x * x
        return _sym({
            (X, X): w / a, (Y, Y): w / b,
            (S, S): ca + cb, (S, T): ca * y2 + cb * x2, (T, T): ca * y2 * y2 + cb * x2 * x2,
        })

    def psi(p):
        x, y, s, t = jets.seed(p)
        return _antisym({(X, S): 2 * x, (X, T): 2 * x * y * y, (Y, S): 2 * y, (Y, T): 2 * y * x * x})

    def j_plus(p):
        return -_j_rows(p, A, B, +1)

    def j_minus(p):
        return -_j_rows(p, A, B, -1)

    def tau(p):
        x, y, s, t = jets.seed(p)
        w = x * x - y * y
        q = x * x + y * y
        return _rows([
            [1.0, 0.0, 0.0, 0.0],
            [0.0, -1.0, 0.0, 0.0],
            [0.0, 0.0, q / w, 2 * x * x * y * y / w],
            [0.0, 0.0, -2.0 / w, -q / w],
        ])

    def omega(sign):
        def fn(p):
            x, y, s, t = jets.seed(p)
            den = (x + sign * y) ** 2
            return _antisym({(X, S): 1.0 / den, (X, T): y * y / den,
                             (Y, S): sign / den, (Y, T): sign * x * x / den})
        return fn

    e = np.eye(4)
    geo = Geometry(Field(metric, dom, "metric", "g"), ORIENTATION, dom, "ambitoric")
    return AmbitoricModel(
        spec, dom, geo,
        Field(psi, dom, "twoform", "psi"),
        Field(j_plus, dom, "endo", "J+ (closed form)"),
        Field(j_minus, dom, "endo", "J- (closed form)"),
        Field(tau, dom, "endo", "tau (closed form)"),
        Field(omega(1), dom, "twoform", "omega+ (closed form)"),
        Field(omega(-1), dom, "twoform", "omega- (closed form)"),
        Field(lambda p: Jet.const(e[S]), dom, "vector", "d/ds"),
        Field(lambda p: Jet.const(e[T]), dom, "vector", "d/dt"),
    )


def _j_rows(p, A, B, sign) -> Jet:
    """Rows: ``J dx, J dy, J ds, J dt`` as coframe coefficients."""
    x, y, s, t = jets.seed(p)
    w = x * x - y * y
    a, b = A(x), B(y)
    ia, ib = 1.0 / a, 1.0 / b
    return _rows([
        [0.0, 0.0, a / w, a * y * y / w],
        [0.0, 0.0, sign * b / w, sign * b * x * x / w],
        [-x * x * ia, sign * y * y * ib, 0.0, 0.0],
        [ia, -sign * ib, 0.0, 0.0],
    ])


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------


def _prof(spec, x, y, n=2):
    if x * x == y * y:
        raise DomainError("x^2 = y^2: closed forms are singular")
    return spec.A.derivs(x, n), spec.B.derivs(y, n)


def scal_closed_form(spec: ProfilePair, x: float, y: float) -> float:
    a, b = _prof(spec, x, y)
    return -(a[2] + b[2]) / (x * x - y * y)


def b_closed_form(spec: ProfilePair, x: float, y: float) -> float:
    a, b = _prof(spec, x, y)
    w = x * x - y * y
    return -(a[2] - b[2]) / (4 * w) + (x * a[1] + y * b[1]) / w**2 - (a[0] + b[0]) / w**2


def h_closed_form(spec: ProfilePair, x: float, y: float) -> tuple[float, float]:
    a, b = _prof(spec, x, y)
    w = x * x - y * y
    hp = -(a[1] + b[1]) / (2 * w) + (x - y) * (a[0] + b[0]) / w**2
    hm = -(a[1] - b[1]) / (2 * w) + (x + y) * (a[0] + b[0]) / w**2
    return hp, hm


def weyl_eigenvalues(spec: ProfilePair, x: float, y: float) -> tuple[float, float]:
    """``lambda+- = Scal/6 - 2 h+-/f+-``, recovered algebraically (no Weyl tensor)."""
    hp, hm = h_closed_form(spec, x, y)
    sc = scal_closed_form(spec, x, y)
    return sc / 6 - 2 * hp / (x + y), sc / 6 - 2 * hm / (x - y)


def h_jets(spec: ProfilePair, x: Jet, y: Jet) -> tuple[Jet, Jet]:
    """``h+-`` composed with jets of ``x`` and ``y`` (exact, any chart)."""
    A, B = spec.A, spec.B
    a, a1 = A(x), A.prime()(x)
    b, b1 = B(y), B.prime()(y)
    w = x * x - y * y
    hp = -(a1 + b1) / (2 * w) + (x - y) * (a + b) / (w * w)
    hm = -(a1 - b1) / (2 * w) + (x + y) * (a + b) / (w * w)
    return hp, hm


def dh_closed_form(spec: ProfilePair, x: float, y: float) -> tuple[np.ndarray, np.ndarray]:
    """``(dh+, dh-)`` as coefficients on ``(dx, dy)``."""
    a, b = _prof(spec, x, y)
    w = x * x - y * y
    S_ = a[0] + b[0]
    dhp = np.array([
        -a[2] / (2 * w) + (a[1] * (2 * x - y) + b[1] * x) / w**2 - S_ * (x - y) * (3 * x - y) / w**3,
        -b[2] / (2 * w) + (-a[1] * y + b[1] * (x - 2 * y)) / w**2 - S_ * (x - y) * (x - 3 * y) / w**3,
    ])
    dhm = np.array([
        -a[2] / (2 * w) + (a[1] * (2 * x + y) - b[1] * x) / w**2 - S_ * (x + y) * (3 * x + y) / w**3,
        b[2] / (2 * w) + (-a[1] * y + b[1] * (x + 2 * y)) / w**2 + S_ * (x + y) * (x + 3 * y) / w**3,
    ])
    return dhp, dhm


# ---------------------------------------------------------------------------
# pluriharmonic functions, eta and s
# ---------------------------------------------------------------------------


def _primitive(prof: Profile, z0: float, z: float) -> float:
    val, err = quad(lambda t: 1.0 / prof.value(t), z0, z, epsabs=1e-12, epsrel=1e-12, limit=200)
    if not np.isfinite(val) or err > 1e-9:
        raise NumericalError(f"quadrature of 1/profile failed on [{z0}, {z}] (err {err:.2g})")
    return val


def _primitive_jet(prof: Profile, z0: float, u: Jet) -> Jet:
    """``int_{z0}^u dt/prof(t)`` composed with the jet ``u``."""
    z = float(u.v)
    d = prof.derivs(z, 1)
    return jets.apply(u, _primitive(prof, z0, z), 1.0 / d[0], -d[1] / d[0] ** 2)


def pluriharmonic_pm(spec: ProfilePair, x: Field, y: Field) -> tuple[Field, Field]:
    """``phi+- = int^x dt/A -+ int^y dt/B`` (lower limits at interval midpoints)."""
    x0 = 0.5 * sum(spec.x_range)
    y0 = 0.5 * sum(spec.y_range)

    def make(sign):
        def fn(p):
            return _primitive_jet(spec.A, x0, x(p)) + sign * _primitive_jet(spec.B, y0, y(p))
        return fn

    return Field(make(-1.0), x.domain, "scalar", "phi+"), Field(make(1.0), x.domain, "scalar", "phi-")


def pluriharmonic_residual(geo: Geometry, J: Field, phi: Field, p) -> float:
    """``|d(J d phi)|_g``."""
    from ..ambikahler import j_on_form

    Jdphi = Field(lambda q: j_on_form(J(q), phi(q).d()), phi.domain, "oneform")
    return rm.form_norm(geo, p, rm.exterior_derivative(Jdphi(p)).v)


def eta_field(model: AmbitoricModel) -> Field:
    """``eta = (J+dx/A + J+dy/B)/2`` from the closed-form ``J+``."""
    from ..ambikahler import j_on_form

    A, B = model.spec.A, model.spec.B

    def fn(p):
        x, y, _, _ = jets.seed(p)
        J = model.J_plus(p)
        e = np.eye(4)
        jdx = j_on_form(J, Jet.const(e[X]))
        jdy = j_on_form(J, Jet.const(e[Y]))
        return 0.5 * (jdx / A(x) + jdy / B(y))

    return Field(fn, model.domain, "oneform", "eta")


def eta_residuals(model: AmbitoricModel, p) -> dict:
    """Checks on ``eta``, ``ds``, ``dt`` and the volume identity at ``p``."""
    from ..ambikahler import j_on_form

    geo = model.geo
    eta = eta_field(model)(p)
    x, y = float(p[0]), float(p[1])
    w = x * x - y * y
    e = np.eye(4)
    # d eta against its closed form
    lhs = rm.exterior_derivative(eta).v
    rhs = (rm.wedge11(-(2 * x * e[X] - 2 * y * e[Y]), eta.v).v + rm.wedge11(x * e[X] + y * e[Y], e[T]).v) / w
    Jp = model.J_plus(p).v
    a, b = model.spec.A.value(x), model.spec.B.value(y)
    ds_bis = x * x * j_on_form(Jp, e[X]) / a - y * y * j_on_form(Jp, e[Y]) / b
    ds_def = w * eta.v - (x * x + y * y) * e[T] / 2
    # compared in magnitude: the sign is fixed by ORIENTATION
    vol = abs(float(geo.volume(p).v))
    top = abs(np.linalg.det(np.array([e[X], e[Y], eta.v, e[T]])))
    return {
        "d_eta": rm.form_norm(geo, p, lhs - rhs),
        "ds_bis": rm.frame_norm(geo, p, ds_bis - e[S], "d"),
        "ds_def": rm.frame_norm(geo, p, ds_def - e[S], "d"),
        "volume": abs(top - vol / w**2),
    }
