"""From a *-Killing 2-form to its pair of conformal Kaehler structures, and back.

Action of endomorphisms on 1-forms: for skew ``J`` we use
``(J a)(X) = -a(J X)`` (so that ``J`` commutes with the musical isomorphism),
for symmetric ``tau`` simply ``(tau a)(X) = a(tau X)``.

Momenta follow ``K -| omega = -d mu``; with this sign ``mu_1^+ = -1/(x+y)``,
``mu_2^+ = xy/(x+y)``, ``mu_1^- = -1/(x-y)`` and ``mu_2^- = -xy/(x-y)`` are
the momenta of ``K1``, ``K2`` for both Kaehler forms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import jets
from . import riemann as rm
from .chart import DIM, DomainError, Field, NumericalError
from .jets import Jet
from .killing import KillingData, build_killing_data, vector_norm
from .riemann import Geometry

F_MARGIN = 1e-6
TAU_CLUSTER_TOL = 1e-8


class ClassificationError(RuntimeError):
    """The trichotomy diagnostics are mutually inconsistent."""

    def __init__(self, msg: str, diagnostics: dict):
        super().__init__(msg)
        self.diagnostics = diagnostics


def j_on_form(J, a):
    """``(J a)_k = -a_i J^i_k``."""
    return -jets.einsum("i,ik->k", a, J) if isinstance(J, Jet) or isinstance(a, Jet) else -(a @ J)


def tau_on_form(T, a):
    return jets.einsum("i,ik->k", a, T) if isinstance(T, Jet) or isinstance(a, Jet) else a @ T


def interior(X, w):
    """``(X -| w)_j = X^i w_ij``."""
    return jets.einsum("i,ij->j", X, w) if isinstance(X, Jet) or isinstance(w, Jet) else X @ w


@dataclass
class AmbiKahlerBundle:
    geo: Geometry
    psi: Field
    data: KillingData
    f_plus: Field
    f_minus: Field
    J_plus: Field
    J_minus: Field
    tau: Field
    g_plus: Field
    g_minus: Field
    omega_plus: Field
    omega_minus: Field
    f: Field
    x: Field
    y: Field
    geo_plus: Geometry
    geo_minus: Geometry


def build_bundle(geo: Geometry, psi: Field, data: KillingData | None = None,
                 margin: float = F_MARGIN) -> AmbiKahlerBundle:
    """Assemble ``f+-``, ``J+-``, ``tau``, ``g+-``, ``omega+-`` from ``(g, psi)``.

    Evaluating any field where ``f+`` or ``f-`` drops below ``margin`` raises
    :class:`DomainError`.
    """
    data = data or build_killing_data(geo, psi)
    dom = psi.domain

    def guarded(sq: Field, label: str) -> Field:
        def fn(p):
            s = sq(p)
            if not s.v > margin**2:
                raise DomainError(f"{label} = {np.sqrt(max(float(s.v), 0.0)):.3g} below margin "
                                  f"{margin:g} at {p}: zero locus of the {label[-1]} part of psi")
            return jets.sqrt(s)
        return Field(fn, dom, "scalar", label)

    fp = guarded(data.fsq_plus, "f+")
    fm = guarded(data.fsq_minus, "f-")
    Jp = Field(lambda p: data.Psi_plus(p) / fp(p), dom, "endo", "J+")
    Jm = Field(lambda p: data.Psi_minus(p) / fm(p), dom, "endo", "J-")
    tau = Field(lambda p: -jets.einsum("ij,jk->ik", Jp(p), Jm(p)), dom, "endo", "tau")
    gp = Field(lambda p: geo.g(p) / (fp(p) * fp(p)), dom, "metric", "g+")
    gm = Field(lambda p: geo.g(p) / (fm(p) * fm(p)), dom, "metric", "g-")
    wp = Field(lambda p: data.psi_plus(p) / fp(p) ** 3, dom, "twoform", "omega+")
    wm = Field(lambda p: data.psi_minus(p) / fm(p) ** 3, dom, "twoform", "omega-")
    f = Field(lambda p: fp(p) / fm(p), dom, "scalar", "f")
    x = Field(lambda p: 0.5 * (fp(p) + fm(p)), dom, "scalar", "x")
    y = Field(lambda p: 0.5 * (fp(p) - fm(p)), dom, "scalar", "y")
    return AmbiKahlerBundle(geo, psi, data, fp, fm, Jp, Jm, tau, gp, gm, wp, wm, f, x, y,
                            Geometry(gp, geo.orientation, dom, "g+"),
                            Geometry(gm, geo.orientation, dom, "g-"))


# ---------------------------------------------------------------------------
# algebraic checks
# ---------------------------------------------------------------------------


def reconstruction_residual(b: AmbiKahlerBundle, p) -> float:
    """``|psi - f+^3 omega+ - f-^3 omega-|_g``."""
    d = b.psi(p).v - b.f_plus(p).v ** 3 * b.omega_plus(p).v - b.f_minus(p).v ** 3 * b.omega_minus(p).v
    return rm.form_norm(b.geo, p, d)


def structure_residuals(b: AmbiKahlerBundle, p) -> dict:
    """Algebraic bundle invariants: ``J^2 = -I``, ``tau^2 = I``, commuting ``J``'s,
    ``omega = g(J., .)`` on both sides."""
    I = np.eye(DIM)
    Jp, Jm, T = b.J_plus(p).v, b.J_minus(p).v, b.tau(p).v
    out = {
        "J+^2": float(np.max(np.abs(Jp @ Jp + I))),
        "J-^2": float(np.max(np.abs(Jm @ Jm + I))),
        "tau^2": float(np.max(np.abs(T @ T - I))),
        "J+J-": float(np.max(np.abs(Jp @ Jm - Jm @ Jp))),
    }
    for side, J, gg, w in (("+", Jp, b.g_plus(p).v, b.omega_plus(p).v), ("-", Jm, b.g_minus(p).v, b.omega_minus(p).v)):
        out["omega" + side] = float(np.max(np.abs(w - J.T @ gg)))
    return out


def kahler_residual_raw(geo: Geometry, J: Field, p) -> float:
    N = rm.covariant_derivative(geo, p, J(p), "ud").v
    return rm.frame_norm(geo, p, N, "udd")


def kahler_residual(b: AmbiKahlerBundle, side: str, p) -> float:
    """``|nabla^{g+-} J+-|`` measured in the orthonormal frame of ``g+-``."""
    if side in ("+", "plus"):
        return kahler_residual_raw(b.geo_plus, b.J_plus, p)
    if side in ("-", "minus"):
        return kahler_residual_raw(b.geo_minus, b.J_minus, p)
    raise ValueError(f"side must be '+' or '-', got {side!r}")


def closedness_residual(geo: Geometry, w: Field, p) -> float:
    return rm.form_norm3(geo, p, rm.exterior_derivative(w(p)).v)


def nijenhuis_residual(geo: Geometry, J: Field, p) -> float:
    return rm.frame_norm(geo, p, rm.nijenhuis(J(p)).v, "udd")


def tau_df_residual(b: AmbiKahlerBundle, p) -> float:
    """``|tau(df+) - df-|_g``."""
    d = tau_on_form(b.tau(p).v, b.f_plus(p).g) - b.f_minus(p).g
    return rm.frame_norm(b.geo, p, d, "d")


def jdf_residual(b: AmbiKahlerBundle, p) -> float:
    """``|J+ df+ - J- df-|_g``."""
    d = j_on_form(b.J_plus(p).v, b.f_plus(p).g) - j_on_form(b.J_minus(p).v, b.f_minus(p).g)
    return rm.frame_norm(b.geo, p, d, "d")


def kappa_field(b: AmbiKahlerBundle, margin: float = 1e-6) -> Field:
    def fn(p):
        f = b.f(p)
        if abs(float(f.v) - 1.0) < margin:
            raise DomainError(f"f = {float(f.v):.6g} too close to 1 at {p}: kappa undefined")
        return tau_on_form(b.tau(p), f.d()) / (1.0 - f * f).truncate(1)
    return Field(fn, b.psi.domain, "oneform", "kappa")


def kappa_form(b: AmbiKahlerBundle, p) -> np.ndarray:
    return kappa_field(b)(p).v


def kappa_closedness(b: AmbiKahlerBundle, samples: Sequence) -> float:
    """``sup |d kappa|_g`` over the samples."""
    k = kappa_field(b)
    return max(rm.form_norm(b.geo, p, rm.exterior_derivative(k(p)).v) for p in samples)


def log_derivative_residual(b: AmbiKahlerBundle, p) -> float:
    """Deviation of ``df+-/f+-`` from the expressions in ``f`` and ``tau(df)``."""
    f = b.f(p)
    fv, df = float(f.v), f.g
    tdf = tau_on_form(b.tau(p).v, df)
    one = 1.0 - fv * fv
    if abs(one) < F_MARGIN:
        raise DomainError(f"f = {fv:.6g} too close to 1 at {p}: log-derivative identity undefined")
    ep = b.f_plus(p).g / float(b.f_plus(p).v) - (df / (fv * one) + tdf / one)
    em = b.f_minus(p).g / float(b.f_minus(p).v) - (fv * df / one + tdf / one)
    return max(rm.frame_norm(b.geo, p, ep, "d"), rm.frame_norm(b.geo, p, em, "d"))


def orthogonality_residual(b: AmbiKahlerBundle, p) -> float:
    """Max ``|g(a, b)|`` over pairs of ``dx, J+dx, dy, J+dy`` (dual metric)."""
    Jp = b.J_plus(p).v
    dx, dy = b.x(p).g, b.y(p).g
    vecs = [dx, j_on_form(Jp, dx), dy, j_on_form(Jp, dy)]
    gi = b.geo.ginv(p).v
    return max(abs(float(vecs[i] @ gi @ vecs[j])) for i in range(4) for j in range(i + 1, 4))


def ricci_structure(b: AmbiKahlerBundle, p, bval: float | None = None) -> dict:
    """``[Ric, J+-]`` and ``Ric - (Scal/4) I - b tau`` in the g-frame.

    When ``bval`` is not given, ``b = tr(Ric tau)/4`` is used.
    """
    cp = rm.curvature(b.geo, p)
    R = cp.ricci
    Jp, Jm, T = b.J_plus(p).v, b.J_minus(p).v, b.tau(p).v
    if bval is None:
        bval = float(np.trace(R @ T)) / 4.0
    rest = R - cp.scal / 4.0 * np.eye(DIM) - bval * T
    return {
        "[Ric,J+]": rm.frame_norm(b.geo, p, R @ Jp - Jp @ R, "ud"),
        "[Ric,J-]": rm.frame_norm(b.geo, p, R @ Jm - Jm @ R, "ud"),
        "Ric-aI-btau": rm.frame_norm(b.geo, p, rest, "ud"),
        "scal": cp.scal,
        "b": bval,
    }


# ---------------------------------------------------------------------------
# involutivity of the eigen-distributions of tau
# ---------------------------------------------------------------------------


def _tau_eigen_check(T: np.ndarray, tol: float = TAU_CLUSTER_TOL) -> None:
    ev = np.sort(np.linalg.eigvals(T).real)
    target = np.array([-1.0, -1.0, 1.0, 1.0])
    if np.max(np.abs(ev - target)) > tol:
        raise NumericalError(f"tau eigenvalues {ev} do not cluster at -1, -1, 1, 1")


def involutivity_residual(b: AmbiKahlerBundle, which: str, p) -> float:
    """Component of ``[X, Y]`` in the opposite eigen-distribution of ``tau``,
    for a local frame ``X, Y`` of ``T+`` (``which='+'``) or ``T-``, normalised
    by ``|X| |Y|``."""
    sgn = 1.0 if which in ("+", "plus") else -1.0
    if which not in ("+", "-", "plus", "minus"):
        raise ValueError("which must be '+' or '-'")
    T = b.tau(p)
    _tau_eigen_check(T.v)
    P = 0.5 * (jets.Jet.const(np.eye(DIM)) + sgn * T)
    Q = 0.5 * (np.eye(DIM) - sgn * T.v)
    g = b.geo.g(p).v
    best, pair = -1.0, (0, 1)
    for a in range(DIM):
        for c in range(a + 1, DIM):
            M = P.v[:, [a, c]]
            gram = np.linalg.det(M.T @ g @ M)
            if gram > best:
                best, pair = gram, (a, c)
    X, Y = P[:, pair[0]], P[:, pair[1]]
    br = rm.lie_bracket(X, Y).v
    nx, ny = vector_norm(b.geo, p, X.v), vector_norm(b.geo, p, Y.v)
    return vector_norm(b.geo, p, Q @ br) / (nx * ny)


# ---------------------------------------------------------------------------
# separation of variables
# ---------------------------------------------------------------------------


def separation_residuals(b: AmbiKahlerBundle, p, A: Callable | None = None,
                         B: Callable | None = None, degenerate_tol: float = 1e-10) -> dict:
    """Residuals of the separation identities at ``p``.

    ``A`` and ``B`` are callables ``z -> (value, first derivative)``; when
    given, the direct profile deviations and the Laplacian identities are
    included.  Entries are ``None`` where the check is degenerate.
    """
    geo = b.geo
    x, y = b.x(p), b.y(p)
    gi = geo.ginv(p)
    out: dict = {}
    for name, u, v, prof in (("x", x, y, A), ("y", y, x, B)):
        du = u.d()
        if np.linalg.norm(du.v) < degenerate_tol:
            out[f"wedge_{name}"] = out[f"profile_{name}"] = out[f"laplace_{name}"] = None
            continue
        sq = jets.einsum("ij,i,j->", gi.truncate(1), du, du)
        w = (x * x - y * y).truncate(1)
        Q = w * sq
        out[f"wedge_{name}"] = rm.form_norm(geo, p, rm.wedge11(Q.g, du.v).v)
        if prof is not None:
            val, der = prof(float(u.v))
            out[f"profile_{name}"] = abs(float(Q.v) - val)
            lap = float(rm.laplacian(geo, p, u).v)
            out[f"laplace_{name}"] = abs(lap + der / float(w.v))
        else:
            out[f"profile_{name}"] = out[f"laplace_{name}"] = None
    return out


def profile_sample(b: AmbiKahlerBundle, p) -> tuple[float, float, float, float]:
    """``(x, (x^2-y^2)|dx|^2, y, (x^2-y^2)|dy|^2)`` at ``p``."""
    x, y = b.x(p), b.y(p)
    gi = b.geo.ginv(p).v
    w = float(x.v) ** 2 - float(y.v) ** 2
    return float(x.v), w * float(x.g @ gi @ x.g), float(y.v), w * float(y.g @ gi @ y.g)


def fit_profiles(b: AmbiKahlerBundle, samples: Sequence, bins: int = 16) -> dict:
    """Binned ``A_fit``, ``B_fit`` tables with a monotone cubic interpolant
    (for reporting only)."""
    from scipy.interpolate import PchipInterpolator

    rows = np.array([profile_sample(b, p) for p in samples])
    out = {}
    for key, cx, cv in (("A_fit", 0, 1), ("B_fit", 2, 3)):
        z, val = rows[:, cx], rows[:, cv]
        edges = np.linspace(z.min(), z.max(), bins + 1)
        idx = np.clip(np.digitize(z, edges) - 1, 0, bins - 1)
        tab = [(float(z[idx == k].mean()), float(val[idx == k].mean())) for k in range(bins) if np.any(idx == k)]
        tab.sort()
        xs = np.array([t[0] for t in tab])
        ys = np.array([t[1] for t in tab])
        interp = PchipInterpolator(xs, ys) if len(xs) >= 2 else None
        out[key] = {"table": tab, "interpolant": interp}
    return out


# ---------------------------------------------------------------------------
# momenta
# ---------------------------------------------------------------------------


def momenta(b: AmbiKahlerBundle, p) -> dict:
    """Jets of ``mu_1^+-, mu_2^+-`` in terms of ``x, y``."""
    x, y = b.x(p), b.y(p)
    return {
        ("K1", "+"): -1.0 / (x + y),
        ("K2", "+"): x * y / (x + y),
        ("K1", "-"): -1.0 / (x - y),
        ("K2", "-"): -(x * y) / (x - y),
    }


def momentum_residual(b: AmbiKahlerBundle, data: KillingData, p, mu: dict | None = None) -> float:
    """``max |K -| omega + d mu|_g`` over the four (field, Kaehler form) pairs."""
    mu = mu or momenta(b, p)
    Ks = {"K1": data.K1(p).v, "K2": data.K2(p).v}
    ws = {"+": b.omega_plus(p).v, "-": b.omega_minus(p).v}
    worst = 0.0
    for (k, s), m in mu.items():
        d = interior(Ks[k], ws[s]) + m.g
        worst = max(worst, rm.frame_norm(b.geo, p, d, "d"))
    return worst


def poisson_residuals(b: AmbiKahlerBundle, data: KillingData, p) -> dict:
    K1, K2 = data.K1(p), data.K2(p)
    return {
        "[K1,K2]": vector_norm(b.geo, p, rm.lie_bracket(K1, K2).v),
        "omega+(K1,K2)": abs(float(K1.v @ b.omega_plus(p).v @ K2.v)),
        "omega-(K1,K2)": abs(float(K1.v @ b.omega_minus(p).v @ K2.v)),
    }


# ---------------------------------------------------------------------------
# trichotomy
# ---------------------------------------------------------------------------


@dataclass
class CaseLabel:
    kind: str
    c: float | None = None
    subcase: str | None = None
    diagnostics: dict = field(default_factory=dict)


def classify_case(geo: Geometry, psi: Field, samples: Sequence, tol: float = 1e-6,
                  data: KillingData | None = None) -> CaseLabel:
    """Decide between the decomposable, Calabi and ambitoric cases.

    Thresholds are relative to RMS scales over the samples.
    """
    data = data or build_killing_data(geo, psi)
    fp, fm, k1k1, k2k1, K1s, K2s, xy = [], [], [], [], [], [], []
    for p in samples:
        a, c = data.fsq_plus(p), data.fsq_minus(p)
        fp.append(np.sqrt(max(float(a.v), 0.0)))
        fm.append(np.sqrt(max(float(c.v), 0.0)))
        K1, K2 = data.K1(p).v, data.K2(p).v
        g = geo.g(p).v
        K1s.append((K1, g))
        K2s.append(K2)
        k1k1.append(float(K1 @ g @ K1))
        k2k1.append(float(K2 @ g @ K1))
        # dx ^ dy with dx, dy from d(f+^2), d(f-^2)
        if fp[-1] > 0 and fm[-1] > 0:
            dfp, dfm = a.g / (2 * fp[-1]), c.g / (2 * fm[-1])
            w = rm.wedge11(0.5 * (dfp + dfm), 0.5 * (dfp - dfm)).v
            xy.append(rm.form_norm(geo, p, w))
        else:
            xy.append(0.0)
    fp, fm = np.array(fp), np.array(fm)
    scale = float(np.sqrt(np.mean(fp**2 + fm**2)))
    diff = float(np.max(np.abs(fp - fm)))
    diag = {"n": len(samples), "f_scale": scale, "sup|f+-f-|": diff}
    if diff <= tol * scale:
        return CaseLabel("decomposable", diagnostics=diag)

    den = float(np.sum(k1k1))
    c = float(np.sum(k2k1)) / den if den > 0 else 0.0
    dev = max(float(np.sqrt(max((K2 - c * K1) @ g @ (K2 - c * K1), 0.0)))
              for (K1, g), K2 in zip(K1s, K2s))
    k2scale = float(np.sqrt(np.mean([K2 @ g @ K2 for (_, g), K2 in zip(K1s, K2s)])))
    diag.update({"c_lsq": c, "sup|K2-cK1|": dev, "K2_scale": k2scale})
    if dev <= tol * max(1.0, k2scale):
        if c <= 0:
            raise ClassificationError("K2 is proportional to K1 with non-positive factor", diag)
        target = 2.0 * np.sqrt(c)
        combos = {"f+ + f-": fp + fm, "f+ - f-": fp - fm, "f- - f+": fm - fp}
        devs = {k: float(np.max(np.abs(v - target))) for k, v in combos.items()}
        diag["combo_deviation"] = devs
        best = min(devs, key=devs.get)
        if devs[best] <= tol * max(1.0, scale):
            return CaseLabel("calabi", c=c, subcase=best, diagnostics=diag)
        raise ClassificationError("K2 = c K1 but no constant sum or difference of f+- found", diag)

    xy = np.array(xy)
    frac = float(np.mean(xy > tol * max(1.0, scale)))
    diag["frac_dx^dy!=0"] = frac
    if frac > 0.5:
        return CaseLabel("ambitoric", diagnostics=diag)
    raise ClassificationError("neither decomposable, Calabi nor ambitoric", diag)
