"""Metric-derived operators on a single chart.

Index conventions (all arrays are coordinate components, derivative axis last):

* ``Gamma[k, i, j] = Gamma^k_ij``.
* endomorphisms ``E[i, j] = E^i_j``; a 2-form ``psi`` has endomorphism
  ``Psi = -g^{-1} psi`` so that ``g(Psi X, Y) = psi(X, Y)``.
* ``riemann[i, j, k, l]`` is the ``i``-component of ``R_{d_k, d_l} d_j`` with
  ``R_{X,Y} = nabla_{[X,Y]} - [nabla_X, nabla_Y]``.  This is minus the more
  common ``[nabla_X, nabla_Y] - nabla_{[X,Y]}``; Ricci and Scal are the usual
  ones (positive on spheres).
* ``delta psi = -sum_i e_i -| nabla_{e_i} psi`` and ``Laplacian = delta d``
  (so ``Delta(c0^2) = -2`` on flat space).
* ``<a, b> = 1/2 a_ij b^ij`` on 2-forms; ``(A, B) = -1/2 tr(AB)`` on endomorphisms.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import jets
from .chart import DIM, Domain, Field, NumericalError
from .jets import Jet

COND_MAX = 1e8


def _levi_civita() -> np.ndarray:
    eps = np.zeros((DIM,) * 4)
    from itertools import permutations

    for perm in permutations(range(DIM)):
        inv = sum(1 for a in range(DIM) for b in range(a + 1, DIM) if perm[a] > perm[b])
        eps[perm] = -1.0 if inv % 2 else 1.0
    return eps


EPS4 = _levi_civita()


class InputError(ValueError):
    """An operator was handed data outside its contract."""


@dataclass
class CurvaturePack:
    riemann: np.ndarray
    ricci: np.ndarray
    ricci_form: np.ndarray
    scal: float


class Geometry:
    """A metric field with an orientation on a chart domain.

    ``orientation=+1`` means the coordinate coframe ``dc0, dc1, dc2, dc3`` in
    that order is direct.  All point-wise quantities are memoised.
    """

    def __init__(self, metric: Field, orientation: int = 1, domain: Domain | None = None,
                 name: str = "geometry"):
        if orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")
        self.metric = metric
        self.orientation = orientation
        self.domain = domain if domain is not None else metric.domain
        self.name = name
        self._inv = lru_cache(maxsize=8192)(self._inv_raw)
        self._chr = lru_cache(maxsize=8192)(self._chr_raw)
        self._vol = lru_cache(maxsize=8192)(self._vol_raw)
        self._frame = lru_cache(maxsize=8192)(self._frame_raw)

    @staticmethod
    def key(p) -> tuple:
        return tuple(float(c) for c in p)

    def g(self, p) -> Jet:
        return self.metric(p)

    def ginv(self, p) -> Jet:
        return self._inv(self.key(p))

    def _inv_raw(self, p):
        return jets.inv(self.metric(p))

    def christoffel_jet(self, p) -> Jet:
        """Christoffel symbols as an order-1 jet (needs an order-2 metric)."""
        return self._chr(self.key(p))

    def _chr_raw(self, p):
        g = self.metric(p)
        dg = g.d()
        low = 0.5 * (jets.einsum("jli->lij", dg) + jets.einsum("ilj->lij", dg) - jets.einsum("ijl->lij", dg))
        return jets.einsum("kl,lij->kij", self.ginv(p).truncate(dg.order), low)

    def volume(self, p) -> Jet:
        return self._vol(self.key(p))

    def _vol_raw(self, p):
        return self.orientation * jets.sqrt(jets.det(self.metric(p)))

    def frame(self, p) -> np.ndarray:
        """g-orthonormal frame ``E`` (columns), Gram-Schmidt in coordinate order."""
        return self._frame(self.key(p))

    def _frame_raw(self, p):
        g = self.metric(p).v
        if np.linalg.cond(g) > COND_MAX:
            raise NumericalError(f"metric condition number above {COND_MAX:g} at {p}")
        L = np.linalg.cholesky(g)
        return np.linalg.inv(L.T)


# ---------------------------------------------------------------------------
# connection and curvature
# ---------------------------------------------------------------------------


def christoffel(geo: Geometry, p) -> np.ndarray:
    return geo.christoffel_jet(p).v


def riemann_std_jet(geo: Geometry, p) -> Jet:
    """``[nabla_k, nabla_l] d_j`` components (common sign), order 0."""
    G = geo.christoffel_jet(p)
    dG = G.d()
    G0 = G.truncate(dG.order)
    return (jets.einsum("iljk->ijkl", dG) - jets.einsum("ikjl->ijkl", dG)
            + jets.einsum("ikm,mlj->ijkl", G0, G0) - jets.einsum("ilm,mkj->ijkl", G0, G0))


def curvature(geo: Geometry, p) -> CurvaturePack:
    std = riemann_std_jet(geo, p).v
    ric = np.einsum("ijil->jl", std)
    ginv = geo.ginv(p).v
    ric_endo = ginv @ ric
    return CurvaturePack(riemann=-std, ricci=ric_endo, ricci_form=ric, scal=float(np.trace(ric_endo)))


def scalar_curvature(geo: Geometry, p) -> float:
    return curvature(geo, p).scal


def bianchi_residual(geo: Geometry, p) -> float:
    R = curvature(geo, p).riemann
    cyc = R + np.einsum("iklj->ijkl", R) + np.einsum("iljk->ijkl", R)
    return float(np.max(np.abs(cyc)))


# ---------------------------------------------------------------------------
# algebra of forms and endomorphisms
# ---------------------------------------------------------------------------


def _ein(sub: str, *ops):
    """``jets.einsum`` when any operand is a jet, plain numpy otherwise."""
    if any(isinstance(o, Jet) for o in ops):
        return jets.einsum(sub, *ops)
    return np.einsum(sub, *ops)


def flat(geo: Geometry, p, v):
    return _ein("ij,j->i", _g_for(geo, p, v), v)


def sharp(geo: Geometry, p, beta):
    return _ein("ij,j->i", _ginv_for(geo, p, beta), beta)


def endo_of_2form(geo: Geometry, p, psi):
    """``Psi^i_k = g^{ij} psi_kj``."""
    return _ein("ij,kj->ik", _ginv_for(geo, p, psi), psi)


def form_of_endo(geo: Geometry, p, E):
    """``psi_ij = g_jk E^k_i`` (inverse of :func:`endo_of_2form`)."""
    return _ein("jk,ki->ij", _g_for(geo, p, E), E)


def endo_inner(A, B) -> float | Jet:
    return -0.5 * jets.einsum("ij,ji->", A, B) if isinstance(A, Jet) or isinstance(B, Jet) \
        else -0.5 * float(np.einsum("ij,ji->", A, B))


def form_inner(geo: Geometry, p, a, b):
    gi = _ginv_for(geo, p, a, b)
    return 0.5 * _ein("ij,ia,jb,ab->", a, gi, gi, b)


def hodge_star_2(geo: Geometry, p, omega):
    """``(*w)_kl = 1/2 vol eps_ijkl w^ij``; jets in, jets out."""
    gi = _ginv_for(geo, p, omega)
    vol = geo.volume(p)
    if isinstance(omega, Jet):
        vol = vol.truncate(omega.order)
        up = jets.einsum("ib,jb->ij", jets.einsum("ia,ab->ib", gi, omega), gi)
        return 0.5 * vol * jets.einsum("ijkl,ij->kl", EPS4, up)
    up = gi @ omega @ gi.T
    return 0.5 * float(vol.v) * np.einsum("ijkl,ij->kl", EPS4, up)


def sd_asd_split(geo: Geometry, p, psi):
    s = hodge_star_2(geo, p, psi)
    return 0.5 * (psi + s), 0.5 * (psi - s)


def wedge11(a, b):
    """``(a ^ b)_ij = a_i b_j - a_j b_i``."""
    return jets.einsum("i,j->ij", a, b) - jets.einsum("j,i->ij", a, b)


def wedge_endo(geo: Geometry, p, alpha, X):
    """Endomorphism ``alpha ^ X``: ``Y -> alpha(Y) X - g(X, Y) alpha^#``."""
    g = _g_for(geo, p, alpha, X)
    gi = _ginv_for(geo, p, alpha, X)
    Xb = jets.einsum("ij,j->i", g, X)
    asharp = jets.einsum("ij,j->i", gi, alpha)
    return jets.einsum("i,k->ik", X, alpha) - jets.einsum("i,k->ik", asharp, Xb)


def wedge_2_2(a, b) -> np.ndarray:
    """Top-degree coefficient of ``a ^ b`` in ``dc0^dc1^dc2^dc3``."""
    return 0.25 * np.einsum("ijkl,ij,kl->", EPS4, np.asarray(a), np.asarray(b))


def _order(*xs):
    return min((x.order for x in xs if isinstance(x, Jet)), default=2)


def _g_for(geo, p, *xs):
    g = geo.g(p)
    if any(isinstance(x, Jet) for x in xs):
        return g.truncate(_order(*xs))
    return g.v


def _ginv_for(geo, p, *xs):
    g = geo.ginv(p)
    if any(isinstance(x, Jet) for x in xs):
        return g.truncate(_order(*xs))
    return g.v


# ---------------------------------------------------------------------------
# differential operators
# ---------------------------------------------------------------------------

_IDX = "abcdefgh"


def covariant_derivative(geo: Geometry, p, T: Jet, slots: str) -> Jet:
    """Full covariant derivative of a tensor jet; new derivative axis last.

    ``slots`` lists the index types, ``"u"`` (contravariant) or ``"d"``
    (covariant), e.g. ``"d"`` for 1-forms, ``"ud"`` for endomorphisms.
    """
    if len(slots) != T.ndim:
        raise InputError(f"slot string {slots!r} does not match tensor rank {T.ndim}")
    D = T.d()
    G = geo.christoffel_jet(p).truncate(D.order)
    T0 = T.truncate(D.order)
    idx = _IDX[: T.ndim]
    out = D
    for s, kind in enumerate(slots):
        m = "m"
        src = idx[:s] + m + idx[s + 1:]
        if kind == "u":
            out = out + jets.einsum(f"{idx[s]}k{m},{src}->{idx}k", G, T0)
        elif kind == "d":
            out = out - jets.einsum(f"{m}k{idx[s]},{src}->{idx}k", G, T0)
        else:
            raise InputError(f"unknown slot type {kind!r}")
    return out


def directional(nablaT, X):
    """Contract the derivative axis of ``nabla T`` with a vector ``X``."""
    if isinstance(nablaT, Jet) or isinstance(X, Jet):
        n = nablaT.ndim - 1
        idx = _IDX[:n]
        return jets.einsum(f"{idx}k,k->{idx}", nablaT, X)
    return np.tensordot(nablaT, X, axes=([-1], [0]))


def exterior_derivative(form: Jet) -> Jet:
    """``d`` of a 1-form (gives ``(dB)_ij``) or a 2-form (gives ``(dw)_ijk``)."""
    D = form.d()
    if form.ndim == 1:
        return jets.einsum("ji->ij", D) - D
    if form.ndim == 2:
        return (jets.einsum("jki->ijk", D) + jets.einsum("kij->ijk", D)
                + jets.einsum("ijk->ijk", D))
    if form.ndim == 0:
        return D
    raise InputError("exterior derivative implemented for degrees 0, 1, 2")


def codifferential_2form(geo: Geometry, p, psi: Jet) -> Jet:
    N = covariant_derivative(geo, p, psi, "dd")
    gi = geo.ginv(p).truncate(N.order)
    return -jets.einsum("ik,ijk->j", gi, N)


def codifferential_1form(geo: Geometry, p, beta: Jet) -> Jet:
    N = covariant_derivative(geo, p, beta, "d")
    gi = geo.ginv(p).truncate(N.order)
    return -jets.einsum("ik,ik->", gi, N)


def hessian(geo: Geometry, p, f: Jet) -> Jet:
    return covariant_derivative(geo, p, f.d(), "d")


def laplacian(geo: Geometry, p, f: Jet) -> Jet:
    """``Delta f = delta d f = -tr_g (nabla d f)``."""
    return codifferential_1form(geo, p, f.d())


def lie_derivative_metric(geo: Geometry, p, K: Jet) -> Jet:
    g = geo.g(p)
    dK = K.d()
    g1 = g.truncate(dK.order)
    K1 = K.truncate(dK.order)
    return (jets.einsum("l,ijl->ij", K1, g.d().truncate(dK.order))
            + jets.einsum("lj,li->ij", g1, dK) + jets.einsum("il,lj->ij", g1, dK))


def lie_bracket(X: Jet, Y: Jet) -> Jet:
    """``[X, Y]^i = X^l d_l Y^i - Y^l d_l X^i``."""
    dX, dY = X.d(), Y.d()
    o = min(dX.order, dY.order)
    return jets.einsum("l,il->i", X.truncate(o), dY.truncate(o)) - jets.einsum("l,il->i", Y.truncate(o), dX.truncate(o))


def nijenhuis(J: Jet, tol: float = 1e-6) -> Jet:
    """``N(X,Y) = [JX,JY] - J[JX,Y] - J[X,JY] - [X,Y]`` as ``N[i, j, k]``."""
    sq = J.v @ J.v + np.eye(DIM)
    if np.max(np.abs(sq)) > tol:
        raise InputError(f"J^2 + I = {np.max(np.abs(sq)):.3g} exceeds {tol:g}")
    dJ = J.d()
    J0 = J.truncate(dJ.order)
    return (jets.einsum("lj,ikl->ijk", J0, dJ) - jets.einsum("lk,ijl->ijk", J0, dJ)
            + jets.einsum("il,ljk->ijk", J0, dJ) - jets.einsum("il,lkj->ijk", J0, dJ))


# ---------------------------------------------------------------------------
# frame norms
# ---------------------------------------------------------------------------


def frame_components(geo: Geometry, p, T, slots: str) -> np.ndarray:
    """Components of ``T`` in the g-orthonormal frame (``"u"``/``"d"`` slots;
    trailing derivative slots count as ``"d"``)."""
    T = T.v if isinstance(T, Jet) else np.asarray(T, dtype=float)
    E = geo.frame(p)
    Einv = np.linalg.inv(E)
    slots = slots + "d" * (T.ndim - len(slots))
    for axis, kind in enumerate(slots):
        M = Einv if kind == "u" else E.T
        T = np.moveaxis(np.tensordot(M, T, axes=([1], [axis])), 0, axis)
    return T


def frame_norm(geo: Geometry, p, T, slots: str) -> float:
    return float(np.linalg.norm(frame_components(geo, p, T, slots)))


def form_norm(geo: Geometry, p, a) -> float:
    """Norm with simple orthonormal 2-forms of norm 1 (``1/sqrt2`` Frobenius)."""
    c = frame_components(geo, p, a, "dd")
    return float(np.sqrt(0.5 * np.sum(c * c)))


def form_norm3(geo: Geometry, p, a) -> float:
    """Norm of a 3-form, normalised like :func:`form_norm`."""
    c = frame_components(geo, p, a, "ddd")
    return float(np.sqrt(np.sum(c * c) / 6.0))
