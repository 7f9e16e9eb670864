"""Verification suites and report assembly.

Each suite evaluates a set of pointwise identities over the seeded sample
set and produces one report row per identity.  Rows record the maximum and
RMS residual over the points where the identity is defined, the tolerance
and the verdict.  A row whose comparison is ``">="`` is a lower-bound check
(the maximum must reach the threshold).
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from . import __version__
from . import ambikahler as ak
from . import killing as kl
from . import riemann as rm
from .ansatz import calabi as cal
from .ansatz import sphere as sph
from .ansatz.ambitoric import (AmbitoricModel, dh_closed_form, eta_residuals, h_jets,
                               pluriharmonic_pm, pluriharmonic_residual)
from .chart import ConstructionError, DomainError, NumericalError, sample_points
from .config import SUITES, Case, build_case

WORKERS_ENV = "KILLING4D_WORKERS"
SKIPPABLE = (DomainError, NumericalError, ZeroDivisionError)


def worker_count() -> int:
    v = os.environ.get(WORKERS_ENV)
    if v:
        try:
            return max(1, int(v))
        except ValueError:
            pass
    return os.cpu_count() or 1


@dataclass
class Row:
    suite: str
    identity: str
    anchor: str
    n_points: int
    max: float | None
    rms: float | None
    tolerance: float
    comparison: str = "<="
    passed: bool | None = None
    detail: str = ""

    def to_json(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


@dataclass
class Check:
    """One identity: ``fn(p)`` returns a residual, or ``None`` if undefined at ``p``."""

    identity: str
    anchor: str
    tol: float
    fn: Callable
    comparison: str = "<="
    points: list | None = None  # own sample set (default: the context's)


class Context:
    """A case, its samples and lazily built derived objects."""

    def __init__(self, case: Case, samples: list, workers: int = 1, seed: int = 0):
        self.case = case
        self.seed = seed
        self.samples = samples
        self.workers = workers

    @cached_property
    def bundle(self) -> ak.AmbiKahlerBundle:
        return ak.build_bundle(self.case.geo, self.case.psi)

    @property
    def data(self) -> kl.KillingData:
        return self.bundle.data

    @cached_property
    def killing_data(self) -> kl.KillingData:
        return kl.build_killing_data(self.case.geo, self.case.psi)

    def xy(self, p) -> tuple[float, float]:
        return float(self.bundle.x(p).v), float(self.bundle.y(p).v)

    def map(self, fn: Callable, points: list) -> list:
        if self.workers <= 1 or len(points) < 2:
            return [fn(p) for p in points]
        with ThreadPoolExecutor(max_workers=self.workers) as ex:
            return list(ex.map(fn, points))


def _safe(fn: Callable, p):
    try:
        v = fn(p)
    except SKIPPABLE:
        return None
    return None if v is None else float(v)


def run_checks(ctx: Context, suite: str, checks: list[Check], tolerances: dict) -> list[Row]:
    shared = [c for c in checks if c.points is None]

    def per_point(p):
        return [_safe(c.fn, p) for c in shared]

    table = ctx.map(per_point, ctx.samples)
    columns = {id(c): [r[j] for r in table] for j, c in enumerate(shared)}
    for c in checks:
        if c.points is not None:
            columns[id(c)] = ctx.map(lambda p, c=c: _safe(c.fn, p), c.points)
    rows = []
    for c in checks:
        vals = np.array([v for v in columns[id(c)] if v is not None], dtype=float)
        tol = tolerances.get(f"{suite}:{c.identity}", tolerances.get(suite, c.tol))
        if vals.size == 0:
            rows.append(Row(suite, c.identity, c.anchor, 0, None, None, tol, c.comparison, None,
                            "undefined at every sample point"))
            continue
        mx = float(np.max(vals))
        rms = float(np.sqrt(np.mean(vals**2)))
        finite = bool(np.all(np.isfinite(vals)))
        ok = finite and (mx <= tol if c.comparison == "<=" else mx >= tol)
        rows.append(Row(suite, c.identity, c.anchor, int(vals.size), mx, rms, tol, c.comparison, ok))
    return rows


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------


def _suite_star_killing(ctx: Context) -> list[Check]:
    geo, psi = ctx.case.geo, ctx.case.psi
    data = ctx.killing_data
    star = kl.hodge_field(geo, psi)
    out = [
        Check("star-Killing", "nabla_X psi = alpha ^ X^flat, alpha = (delta psi)/3", 1e-8,
              lambda p: kl.star_killing_residual(geo, psi, p).value),
        Check("closed psi", "d psi = 0", 1e-9, lambda p: ak.closedness_residual(geo, psi, p)),
        Check("Killing *psi", "nabla_X (*psi) = (1/3) X -| d(*psi)", 1e-8,
              lambda p: kl.killing_2form_residual(geo, star, p).value),
    ]
    if ctx.case.expected[0] != "parallel":
        out += [
            Check("conformal Killing psi+", "nabla_X psi+ = alpha+ ^ X^flat + X -| beta+", 1e-8,
                  lambda p: kl.conformal_killing_residual(geo, data.psi_plus, p).value),
            Check("conformal Killing psi-", "nabla_X psi- = alpha- ^ X^flat + X -| beta-", 1e-8,
                  lambda p: kl.conformal_killing_residual(geo, data.psi_minus, p).value),
        ]
    return out


def _suite_kahler(ctx: Context) -> list[Check]:
    b = ctx.bundle
    geo = ctx.case.geo
    out = [
        Check("Kahler J+", "nabla^{g+} J+ = 0, g+ = f+^-2 g", 1e-8, lambda p: ak.kahler_residual(b, "+", p)),
        Check("Kahler J-", "nabla^{g-} J- = 0, g- = f-^-2 g", 1e-8, lambda p: ak.kahler_residual(b, "-", p)),
        Check("closed omega+", "d omega+ = 0 (norm of g+)", 1e-9,
              lambda p: ak.closedness_residual(b.geo_plus, b.omega_plus, p)),
        Check("closed omega-", "d omega- = 0 (norm of g-)", 1e-9,
              lambda p: ak.closedness_residual(b.geo_minus, b.omega_minus, p)),
        Check("integrable J+", "N_{J+} = 0", 1e-8, lambda p: ak.nijenhuis_residual(geo, b.J_plus, p)),
        Check("integrable J-", "N_{J-} = 0", 1e-8, lambda p: ak.nijenhuis_residual(geo, b.J_minus, p)),
        Check("reconstruction", "psi = f+^3 omega+ + f-^3 omega-", 1e-10,
              lambda p: ak.reconstruction_residual(b, p)),
        Check("bundle algebra", "J+^2 = J-^2 = -I, tau^2 = I, [J+, J-] = 0, omega = g(J., .)", 1e-10,
              lambda p: max(ak.structure_residuals(b, p).values())),
        Check("tau(df+) = df-", "tau(df+) = df-", 1e-9, lambda p: ak.tau_df_residual(b, p)),
        Check("J+df+ = J-df-", "J+ df+ = J- df-", 1e-9, lambda p: ak.jdf_residual(b, p)),
        Check("alpha = -2 J+ df+", "alpha = -2 J+ df+", 1e-8, lambda p: rm.frame_norm(
            geo, p, ctx.data.alpha(p).v + 2 * ak.j_on_form(b.J_plus(p).v, b.f_plus(p).g), "d")),
    ]
    kind = ctx.case.expected[0]
    if kind != "decomposable":
        # f = 1 identically in the decomposable case
        out += [
            Check("kappa closed", "d(tau(df)/(1 - f^2)) = 0, f = f+/f-", 1e-8, lambda p: rm.form_norm(
                geo, p, rm.exterior_derivative(ak.kappa_field(b)(p)).v)),
            Check("log-derivatives", "df+/f+ = df/(f(1-f^2)) + tau(df)/(1-f^2)", 1e-8,
                  lambda p: ak.log_derivative_residual(b, p)),
        ]
    if ctx.case.ambitoric:
        out += [
            Check("orthogonality", "dx, J+dx, dy, J+dy pairwise orthogonal", 1e-9,
                  lambda p: ak.orthogonality_residual(b, p)),
            Check("T+ not involutive", "T+ involutive iff tau(df) = df; here tau(df) != df", 1e-3,
                  lambda p: ak.involutivity_residual(b, "+", p), comparison=">="),
        ]
    elif kind == "decomposable":
        out += [
            Check("T+ involutive", "product foliation: [T+, T+] in T+", 1e-8,
                  lambda p: ak.involutivity_residual(b, "+", p)),
            Check("T- involutive", "product foliation: [T-, T-] in T-", 1e-8,
                  lambda p: ak.involutivity_residual(b, "-", p)),
        ]
    elif kind == "calabi":
        # f+ + f- constant <=> tau(df) = -df <=> T- involutive; otherwise T+
        sgn = -1.0 if ctx.case.expected[2] == "f+ + f-" else 1.0
        side = "+" if sgn > 0 else "-"
        out += [
            Check(f"tau(df) = {side}df", f"tau(df) = {side}df in the Calabi case", 1e-8, lambda p: rm.frame_norm(
                geo, p, ak.tau_on_form(b.tau(p).v, b.f(p).g) - sgn * b.f(p).g, "d")),
            Check(f"T{side} involutive", f"T{side} involutive iff tau(df) = {side}df", 1e-8,
                  lambda p: ak.involutivity_residual(b, side, p)),
        ]
    return out


def _suite_curvature(ctx: Context) -> list[Check]:
    geo = ctx.case.geo
    b = ctx.bundle
    prof = ctx.case.profiles
    out = [Check("first Bianchi", "R(X,Y)Z + R(Y,Z)X + R(Z,X)Y = 0", 1e-9, lambda p: rm.bianchi_residual(geo, p))]

    def bval(p):
        if prof is None:
            return None
        from .ansatz.ambitoric import b_closed_form
        return b_closed_form(prof, *ctx.xy(p))

    if prof is not None:
        from .ansatz.ambitoric import scal_closed_form
        out.append(Check("Scal closed form", "Scal = -(A''(x) + B''(y))/(x^2 - y^2)", 1e-6,
                         lambda p: abs(rm.scalar_curvature(geo, p) - scal_closed_form(prof, *ctx.xy(p)))))
    if ctx.case.family in ("sphere",):
        out.append(Check("Scal = 12", "round S^4: Scal = n(n-1) = 12", 1e-6,
                         lambda p: abs(rm.scalar_curvature(geo, p) - 12.0)))
    if ctx.case.expected[0] == "parallel" or ctx.case.family == "product":
        # the Ricci structure needs K1 Killing
        return out
    out += [
        Check("[Ric, J+] = 0", "[Ric, J+] = 0", 1e-6, lambda p: ak.ricci_structure(b, p)["[Ric,J+]"]),
        Check("[Ric, J-] = 0", "[Ric, J-] = 0", 1e-6, lambda p: ak.ricci_structure(b, p)["[Ric,J-]"]),
        Check("Ric = aI + b tau", "Ric = (Scal/4) I + b tau" + (", b closed form" if prof else ""), 1e-6,
              lambda p: ak.ricci_structure(b, p, bval(p))["Ric-aI-btau"]),
    ]
    return out


def _suite_separation(ctx: Context) -> list[Check]:
    b = ctx.bundle
    geo = ctx.case.geo
    prof = ctx.case.profiles
    A, B = prof.A.val_der, prof.B.val_der

    def sep(key):
        return lambda p: ak.separation_residuals(b, p, A, B)[key]

    out = [
        Check("d((x^2-y^2)|dx|^2) ^ dx = 0", "(x^2-y^2)|dx|^2 depends on x only", 1e-7, sep("wedge_x")),
        Check("d((x^2-y^2)|dy|^2) ^ dy = 0", "(x^2-y^2)|dy|^2 depends on y only", 1e-7, sep("wedge_y")),
        Check("|dx|^2 = A(x)/(x^2-y^2)", "|dx|^2 = A(x)/(x^2-y^2)", 1e-7, sep("profile_x")),
        Check("|dy|^2 = B(y)/(x^2-y^2)", "|dy|^2 = B(y)/(x^2-y^2)", 1e-7, sep("profile_y")),
        Check("Laplacian of x", "Delta x = -A'(x)/(x^2-y^2)", 1e-6, sep("laplace_x")),
        Check("Laplacian of y", "Delta y = -B'(y)/(x^2-y^2)", 1e-6, sep("laplace_y")),
    ]
    php, phm = pluriharmonic_pm(prof, b.x, b.y)
    out += [
        Check("J+-pluriharmonic phi+", "d(J+ d phi+) = 0, phi+ = int dx/A - int dy/B", 1e-8,
              lambda p: pluriharmonic_residual(geo, b.J_plus, php, p)),
        Check("J--pluriharmonic phi-", "d(J- d phi-) = 0, phi- = int dx/A + int dy/B", 1e-8,
              lambda p: pluriharmonic_residual(geo, b.J_minus, phm, p)),
    ]
    if isinstance(ctx.case.model, AmbitoricModel):
        m = ctx.case.model
        out += [
            Check("d eta", "d eta = (-(2x dx - 2y dy) ^ eta + (x dx + y dy) ^ dt)/(x^2-y^2)", 1e-8,
                  lambda p: eta_residuals(m, p)["d_eta"]),
            Check("ds expression", "ds = x^2 J+dx/A(x) - y^2 J+dy/B(y)", 1e-9,
                  lambda p: eta_residuals(m, p)["ds_bis"]),
            Check("ds definition", "(x^2-y^2) eta - (x^2+y^2) dt/2 = ds", 1e-9,
                  lambda p: eta_residuals(m, p)["ds_def"]),
            Check("volume identity", "|dx ^ dy ^ eta ^ dt| = |v_g|/(x^2-y^2)^2", 1e-8,
                  lambda p: eta_residuals(m, p)["volume"]),
        ]
    return out


def _suite_killing_fields(ctx: Context) -> list[Check]:
    geo = ctx.case.geo
    b = ctx.bundle
    d = ctx.data
    prof = ctx.case.profiles
    out = [
        Check("L_K1 g = 0", "K1 = -alpha^#/2 is Killing", 1e-8, lambda p: kl.killing_vector_residual(geo, d.K1, p)),
        Check("L_K2 g = 0", "K2 = Phi(grad(f+^2 - f-^2))/8 is Killing", 1e-8,
              lambda p: kl.killing_vector_residual(geo, d.K2, p)),
        Check("[K1, K2] = 0", "[K1, K2] = 0", 1e-8, lambda p: ak.poisson_residuals(b, d, p)["[K1,K2]"]),
        Check("omega+(K1, K2) = 0", "omega+(K1, K2) = 0", 1e-9,
              lambda p: ak.poisson_residuals(b, d, p)["omega+(K1,K2)"]),
        Check("omega-(K1, K2) = 0", "omega-(K1, K2) = 0", 1e-9,
              lambda p: ak.poisson_residuals(b, d, p)["omega-(K1,K2)"]),
        Check("K2 = S(K1)/2", "K2 = S(K1)/2, S = -Phi o Phi/2", 1e-9, lambda p: kl.k2_relation_residual(geo, d, p)),
    ]
    if prof is not None:
        def nab(p):
            hp, hm = h_jets(prof, b.x(p), b.y(p))
            D = kl.nabla_alpha_sharp(geo, d, p) - float(hp.v) * b.J_plus(p).v - float(hm.v) * b.J_minus(p).v
            return rm.frame_norm(geo, p, D, "ud")

        def dh(p):
            hp, hm = h_jets(prof, b.x(p), b.y(p))
            dhp, dhm = dh_closed_form(prof, *ctx.xy(p))
            X = np.array([b.x(p).g, b.y(p).g])
            return max(np.max(np.abs(hp.g - dhp @ X)), np.max(np.abs(hm.g - dhm @ X)))

        out += [
            Check("nabla alpha^# = h+J+ + h-J-", "nabla alpha^# = h+ J+ + h- J-, h+- closed forms", 1e-7, nab),
            Check("dh+- closed forms", "dh+ and dh- in terms of A, B and their derivatives", 1e-8, dh),
        ]
    if isinstance(ctx.case.model, AmbitoricModel):
        m = ctx.case.model
        out += [
            Check("K1 = d/ds", "K1 = d/ds", 1e-8, lambda p: rm.frame_norm(geo, p, d.K1(p).v - m.K1(p).v, "u")),
            Check("K2 = d/dt", "K2 = d/dt", 1e-8, lambda p: rm.frame_norm(geo, p, d.K2(p).v - m.K2(p).v, "u")),
            Check("K1^flat = J+dx + J+dy", "g(K1, .) = J+dx + J+dy", 1e-8, lambda p: rm.frame_norm(
                geo, p, rm.flat(geo, p, d.K1(p).v) - ak.j_on_form(b.J_plus(p).v, np.eye(4)[0] + np.eye(4)[1]), "d")),
        ]
    return out


def _suite_momenta(ctx: Context) -> list[Check]:
    b, d = ctx.bundle, ctx.data
    return [
        Check("moment maps", "K -| omega = -d mu; mu1+ = -1/(x+y), mu2+ = xy/(x+y), "
              "mu1- = -1/(x-y), mu2- = -xy/(x-y)", 1e-8, lambda p: ak.momentum_residual(b, d, p)),
    ]


def _suite_killing_tensor(ctx: Context) -> list[Check]:
    geo = ctx.case.geo
    d = ctx.killing_data
    out = [Check("S Killing tensor", "g((nabla_X S)X, X) = 0 over 32 unit directions", 1e-8,
                 lambda p: kl.killing_tensor_residual(geo, d.S, p)),
           Check("S symmetric", "g(SX, Y) = g(X, SY)", 1e-10, lambda p: float(np.max(np.abs(
               geo.g(p).v @ d.S(p).v - (geo.g(p).v @ d.S(p).v).T))))]
    if ctx.case.ambitoric:
        def eig(p):
            x, y = ctx.xy(p)
            return float(np.max(np.abs(np.sort(kl.s_eigenvalues(d, p)) - np.sort([2 * x * x] * 2 + [2 * y * y] * 2))))
        out.append(Check("S eigenvalues", "spec S = {(f+ + f-)^2/2, (f+ - f-)^2/2}", 1e-8, eig))
    return out


def _suite_deformation(ctx: Context) -> list[Check]:
    par = ctx.case.params
    spec = par.get("spec") or sph.SphereSpec(par["lambda"], par["mu"], eps_A=0.01)
    model = ctx.case.model if ctx.case.family == "deformed-sphere" else sph.build_deformed_sphere(spec)
    A0, B0 = sph.sphere_profiles(spec.lam, spec.mu)
    At, Bt = sph.deformed_profiles(spec)
    lo, hi = spec.lam / 2, spec.mu / 2
    collar = np.concatenate([np.linspace(lo, lo + spec.collar, 50), np.linspace(hi - spec.collar, hi, 50)])
    ycollar = np.concatenate([np.linspace(-lo, -lo + spec.collar, 50), np.linspace(lo - spec.collar, lo, 50)])
    collar_dev = max(max(abs(At.value(z) - A0.value(z)) for z in collar),
                     max(abs(Bt.value(z) - B0.value(z)) for z in ycollar))
    eps_star = sph.breaking_eps(sph.SphereSpec(spec.lam, spec.mu, collar=spec.collar))

    def breaks() -> float:
        try:
            sph.build_deformed_sphere(sph.SphereSpec(spec.lam, spec.mu, eps_A=1.01 * eps_star, collar=spec.collar))
        except ConstructionError:
            return 0.0
        return 1.0

    broken = breaks()
    pts = ctx.samples if model is ctx.case.model else sample_points(model.domain, len(ctx.samples), ctx.seed)
    return [
        Check("star-Killing (deformed metric)", "psi unchanged stays star-Killing for A~, B~", 1e-8,
              lambda p: kl.star_killing_residual(model.geo, model.psi, p).value, points=pts),
        Check("collar agreement", "A~ = A, B~ = B near the rectangle boundary", 1e-14, lambda p: collar_dev),
        Check("positivity loss detected", f"construction error at 1.01 eps*, eps* = {eps_star:.6g}", 0.5,
              lambda p: broken),
    ]


def _suite_calabi(ctx: Context) -> list[Check]:
    m: cal.CalabiModel = ctx.case.model
    k = m.spec.k
    out = [
        Check("Kahler pair", "nabla^{g_phi} omega_phi = 0", 1e-8, lambda p: cal.kahler_pair_residual(m, p)),
        Check("dd^c t = omega_Sigma", "d(ds + theta) = omega_Sigma, d^c t(K) = 1", 1e-9,
              lambda p: max(cal.dct_checks(m, p).values())),
    ]
    if k == 0:
        return out
    b = ctx.bundle
    sub, val = cal.expected_subcase(m.spec)
    sgn = 1.0 if k > 0 else -1.0
    combos = {"f+ + f-": (1, 1), "f+ - f-": (1, -1), "f- - f+": (-1, 1)}
    cp, cm = combos[sub]
    out += [
        Check("tau(K) = -sign(k) K", "tau(K) = -K for the Calabi structure; tau^(k) = sign(k) tau", 1e-10,
              lambda p: rm.frame_norm(ctx.case.geo, p, b.tau(p).v @ m.K(p).v + sgn * m.K(p).v, "u")),
        Check(f"{sub} = 2 sqrt(c)", f"{sub} constant = {val:g}", 1e-8,
              lambda p: abs(cp * float(b.f_plus(p).v) + cm * float(b.f_minus(p).v) - val)),
        Check("k-family rescaling", "f+^(k) |k + f| / f = 1, f = 1/phi", 1e-9,
              lambda p: abs(float(b.f_plus(p).v) * abs(k + 1 / m.spec.phi.value(p[2])) * m.spec.phi.value(p[2]) - 1)),
        Check("g+ = g_phi", "g+^(k) = g_phi for every k", 1e-9,
              lambda p: float(np.max(np.abs(b.g_plus(p).v - m.g_phi(p).v)))),
        Check("K2 = c K1", "K2 = c K1", 1e-8, lambda p: rm.frame_norm(
            ctx.case.geo, p, ctx.data.K2(p).v - val * val / 4 * ctx.data.K1(p).v, "u")),
    ]
    return out


def _suite_product(ctx: Context) -> list[Check]:
    m = ctx.case.model
    geo = ctx.case.geo
    d = ctx.killing_data
    return [
        Check("alpha closed form", "alpha = -*_Sigma dphi, i.e. alpha^# = -phi^-2 (*_Sigma dphi)^#", 1e-8,
              lambda p: rm.frame_norm(geo, p, d.alpha(p).v - m.alpha(p).v, "d")),
        Check("*psi = phi^3 omega_Sigma~", "*psi = phi^3 omega_Sigma~", 1e-10, lambda p: float(np.max(np.abs(
            rm.hodge_star_2(geo, p, m.psi(p).v) - m.star_psi(p).v)))),
        Check("K2 = 0", "K2 = 0 in the decomposable case", 1e-10, lambda p: rm.frame_norm(geo, p, d.K2(p).v, "u")),
        Check("f+ = f- = phi/2", "f+ = f- = phi/2 for psi = phi^3 omega_Sigma", 1e-10, lambda p: max(
            abs(math.sqrt(float(d.fsq_plus(p).v)) - float(m.phi(p).v) / 2),
            abs(math.sqrt(float(d.fsq_minus(p).v)) - float(m.phi(p).v) / 2))),
        Check("tau(dphi) = dphi", "tau(dphi) = dphi", 1e-10, lambda p: rm.frame_norm(
            geo, p, ak.tau_on_form(ctx.bundle.tau(p).v, m.phi(p).g) - m.phi(p).g, "d")),
        Check("K1 not Killing", "L_K1 g != 0 somewhere", 1e-3,
              lambda p: kl.killing_vector_residual(geo, d.K1, p), comparison=">="),
    ]


def _suite_sphere(ctx: Context) -> list[Check]:
    m = ctx.case.model
    lam, mu = m.spec.lam, m.spec.mu
    d = ctx.killing_data

    def fpm(p):
        return math.sqrt(max(float(d.fsq_plus(p).v), 0.0)), math.sqrt(max(float(d.fsq_minus(p).v), 0.0))

    out = [
        Check("f+- closed form", "2f+- = sqrt((lambda +- mu u0)^2 + (mu^2 - lambda^2)(u1^2 + u2^2))", 1e-9,
              lambda p: max(abs(a - b) for a, b in zip(fpm(p), m.f_closed_form(p)))),
        Check("f+^2 - f-^2 = lambda mu u0", "f+^2 - f-^2 = lambda mu u0 = pf(psi)", 1e-9,
              lambda p: abs(fpm(p)[0] ** 2 - fpm(p)[1] ** 2 - lam * mu * sph.embedding(p)[0])),
    ]
    if 0 < lam < mu:
        def xyu(p):
            fp, fm = fpm(p)
            return max(sph.xyu_residuals(m.spec, (fp + fm) / 2, (fp - fm) / 2, sph.embedding(p)).values())
        out.append(Check("x, y versus u", "u0 = 4xy/(lambda mu) and the u1^2+u2^2, u3^2+u4^2 identities", 1e-9, xyu))
    if lam == mu:
        out.append(Check("f+ + f- = lambda", "f+ + f- = lambda", 1e-9, lambda p: abs(sum(fpm(p)) - lam)))
    return out


def _classifier_rows(ctx: Context, tolerances: dict) -> list[Row]:
    exp = ctx.case.expected
    label = ak.classify_case(ctx.case.geo, ctx.case.psi, ctx.samples)
    ok = label.kind == exp[0]
    if ok and exp[0] == "calabi":
        ok = label.subcase == exp[2] and abs(label.c - exp[1]) <= 1e-6 * max(1.0, exp[1])
    got = label.kind + (f"(c={label.c:.12g}, {label.subcase})" if label.kind == "calabi" else "")
    want = exp[0] + (f"(c={exp[1]:.12g}, {exp[2]})" if exp[0] == "calabi" else "")
    return [Row("classifier", "case label", "exactly one of: ambitoric, calabi(c), decomposable",
                len(ctx.samples), 0.0 if ok else 1.0, 0.0 if ok else 1.0, 0.5, "<=", ok,
                f"expected {want}, got {got}")]


_SUITE_FNS: dict[str, Callable] = {
    "star-killing": _suite_star_killing,
    "kahler": _suite_kahler,
    "curvature-closed-forms": _suite_curvature,
    "separation": _suite_separation,
    "killing-fields": _suite_killing_fields,
    "momenta": _suite_momenta,
    "killing-tensor": _suite_killing_tensor,
    "deformation": _suite_deformation,
    "calabi-family": _suite_calabi,
    "product": _suite_product,
    "sphere-formulas": _suite_sphere,
}


def applicable(case: Case, suite: str) -> str | None:
    """``None`` if the suite applies to the case, else the reason it is skipped."""
    fam, kind = case.family, case.expected[0]
    if kind == "parallel" and suite in ("kahler", "killing-fields", "momenta", "classifier"):
        return "psi is parallel (k = 0): f- vanishes"
    if suite == "separation" and case.profiles is None:
        return "no closed-form profiles A, B for this geometry"
    if suite == "killing-fields" and fam == "product":
        return "K1 is not Killing in the decomposable case (see suite product)"
    if suite == "momenta" and not case.ambitoric:
        return "momenta are expressed in independent x, y"
    if suite == "deformation" and not (fam == "deformed-sphere" or (fam == "sphere" and case.profiles is not None)):
        return "deformation applies to the sphere with 0 < lambda < mu"
    if suite == "calabi-family" and fam != "calabi":
        return "calabi family only"
    if suite == "product" and fam != "product":
        return "product family only"
    if suite == "sphere-formulas" and fam != "sphere":
        return "stereographic sphere only"
    return None


def run(cfg: dict, suites: list[str] | None = None, workers: int | None = None) -> dict:
    """Build the configured geometry, run suites, return the report dict."""
    case = build_case(cfg)
    seed = int(cfg.get("seed", 0))
    n = int(cfg.get("samples", 100))
    samples = sample_points(case.domain, n, seed)
    ctx = Context(case, samples, workers or worker_count(), seed)
    tolerances = cfg.get("tolerances", {})
    wanted = suites or cfg.get("suites") or list(SUITES)
    order = [s for s in SUITES if s in wanted]  # classifier last
    report_suites: dict = {}
    skipped: dict = {}
    for s in order:
        why = applicable(case, s)
        if why:
            skipped[s] = why
            continue
        if s == "classifier":
            rows = _classifier_rows(ctx, tolerances)
        else:
            rows = run_checks(ctx, s, _SUITE_FNS[s](ctx), tolerances)
        report_suites[s] = {
            "rows": [r.to_json() for r in rows],
            "pass": all(r.passed is not False for r in rows),
        }
    overall = all(v["pass"] for v in report_suites.values())
    return {
        "fingerprint": {"version": __version__, "seed": seed},
        "geometry": case.family,
        "n_samples": len(samples),
        "suites": report_suites,
        "skipped": skipped,
        "pass": overall,
        "failing_suites": [k for k, v in report_suites.items() if not v["pass"]],
    }


def report_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, allow_nan=True) + "\n"


# ---------------------------------------------------------------------------
# field dumps
# ---------------------------------------------------------------------------


def dump_columns(ctx: Context) -> dict[str, Callable]:
    b = ctx.bundle
    geo = ctx.case.geo
    return {
        "f+": lambda p: float(b.f_plus(p).v),
        "f-": lambda p: float(b.f_minus(p).v),
        "x": lambda p: float(b.x(p).v),
        "y": lambda p: float(b.y(p).v),
        "Scal": lambda p: rm.scalar_curvature(geo, p),
        "b": lambda p: ak.ricci_structure(b, p)["b"],
        "star-killing": lambda p: kl.star_killing_residual(geo, ctx.case.psi, p).value,
        "kahler+": lambda p: ak.kahler_residual(b, "+", p),
        "kahler-": lambda p: ak.kahler_residual(b, "-", p),
        "tau-df": lambda p: ak.tau_df_residual(b, p),
        "bianchi": lambda p: rm.bianchi_residual(geo, p),
    }
