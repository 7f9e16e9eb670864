"""Second-order forward-mode jets over a 4-dimensional chart.

A :class:`Jet` carries a tensor-valued quantity together with its first and
second partial derivatives with respect to the four chart coordinates.  The
component axes come first and the derivative axes are appended last, so a
metric jet has ``v.shape == (4, 4)``, ``g.shape == (4, 4, 4)`` and
``h.shape == (4, 4, 4, 4)`` with ``g[i, j, k] = d_k g_ij``.

Jets are truncated: an order-2 jet knows value, gradient and Hessian, an
order-1 jet drops the Hessian, an order-0 jet is a bare value.  Arithmetic
between jets keeps the lowest order of its operands, and :meth:`Jet.d`
trades one order for an extra (derivative) component axis.  That is what lets
Christoffel symbols and curvature be built from second-order metric jets
without any finite differencing.

Hessians are symmetrised on construction, ``0.5 * (h + h^T)``, which makes
``h[..., a, b] == h[..., b, a]`` hold bitwise.
"""

from __future__ import annotations

import functools
import string
from typing import Callable, Iterable, Sequence

import numpy as np

DIM = 4


def _sym(h: np.ndarray) -> np.ndarray:
    return 0.5 * (h + np.swapaxes(h, -1, -2))


class Jet:
    """Truncated Taylor data (value, gradient, Hessian) of a tensor quantity."""

    __slots__ = ("v", "g", "h")
    __array_priority__ = 100.0

    def __init__(self, v, g=None, h=None):
        self.v = np.asarray(v, dtype=float)
        self.g = None if g is None else np.asarray(g, dtype=float)
        self.h = None
        if h is not None:
            if self.g is None:
                raise ValueError("a Hessian requires a gradient")
            self.h = _sym(np.asarray(h, dtype=float))

    # -- construction -----------------------------------------------------
    @classmethod
    def const(cls, v, order: int = 2) -> "Jet":
        v = np.asarray(v, dtype=float)
        g = np.zeros(v.shape + (DIM,)) if order >= 1 else None
        h = np.zeros(v.shape + (DIM, DIM)) if order >= 2 else None
        return cls(v, g, h)

    @classmethod
    def _raw(cls, v, g, h) -> "Jet":
        """Internal constructor for arrays whose Hessian is already symmetric
        bitwise (sums, products and chain-rule terms of symmetric parts)."""
        out = object.__new__(cls)
        out.v, out.g, out.h = v, g, h
        return out

    @property
    def order(self) -> int:
        if self.h is not None:
            return 2
        return 1 if self.g is not None else 0

    @property
    def shape(self) -> tuple:
        return self.v.shape

    @property
    def ndim(self) -> int:
        return self.v.ndim

    def truncate(self, order: int) -> "Jet":
        if order >= self.order:
            return self
        return Jet._raw(self.v, self.g if order >= 1 else None, self.h if order >= 2 else None)

    def d(self) -> "Jet":
        """Partial derivatives as a jet one order lower (derivative axis last)."""
        if self.g is None:
            raise ValueError("cannot differentiate an order-0 jet")
        return Jet._raw(self.g, self.h, None)

    def __repr__(self) -> str:
        return f"Jet(order={self.order}, shape={self.shape}, v={self.v!r})"

    # -- indexing / reshaping on component axes ---------------------------
    def __getitem__(self, idx) -> "Jet":
        if not isinstance(idx, tuple):
            idx = (idx,)
        if any(i is Ellipsis for i in idx):
            raise IndexError("Ellipsis indexing is ambiguous on jets")
        return Jet(
            self.v[idx],
            None if self.g is None else self.g[idx],
            None if self.h is None else self.h[idx],
        )

    def transpose(self, *axes) -> "Jet":
        if not axes:
            axes = tuple(reversed(range(self.ndim)))
        elif len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        n = self.ndim
        return Jet(
            np.transpose(self.v, axes),
            None if self.g is None else np.transpose(self.g, tuple(axes) + (n,)),
            None if self.h is None else np.transpose(self.h, tuple(axes) + (n, n + 1)),
        )

    @property
    def T(self) -> "Jet":
        return self.transpose()

    def sum(self, axis=None) -> "Jet":
        if axis is None:
            axis = tuple(range(self.ndim))
        elif isinstance(axis, int):
            axis = (axis,)
        axis = tuple(a % self.ndim for a in axis)
        return Jet(
            self.v.sum(axis=axis),
            None if self.g is None else self.g.sum(axis=axis),
            None if self.h is None else self.h.sum(axis=axis),
        )

    def trace(self) -> "Jet":
        return einsum("ii->", self)

    # -- arithmetic -------------------------------------------------------
    def __neg__(self) -> "Jet":
        return Jet._raw(-self.v, None if self.g is None else -self.g, None if self.h is None else -self.h)

    def __pos__(self) -> "Jet":
        return self

    def __add__(self, other) -> "Jet":
        if isinstance(other, Jet):
            order = min(self.order, other.order)
            v = self.v + other.v
            if self.v.shape == other.v.shape:
                g = self.g + other.g if order >= 1 else None
                h = self.h + other.h if order >= 2 else None
                return Jet._raw(v, g, h)
            shape = v.shape
            g = _badd(self.g, other.g, shape + (DIM,)) if order >= 1 else None
            h = _badd(self.h, other.h, shape + (DIM, DIM)) if order >= 2 else None
            return Jet._raw(v, g, h)
        c = np.asarray(other, dtype=float)
        shape = np.broadcast_shapes(self.shape, c.shape)
        return Jet._raw(
            self.v + c,
            None if self.g is None else np.broadcast_to(self.g, shape + (DIM,)),
            None if self.h is None else np.broadcast_to(self.h, shape + (DIM, DIM)),
        )

    __radd__ = __add__

    def __sub__(self, other) -> "Jet":
        return self + (-other)

    def __rsub__(self, other) -> "Jet":
        return (-self) + other

    def __mul__(self, other) -> "Jet":
        if isinstance(other, Jet):
            order = min(self.order, other.order)
            a, b = self, other
            v = a.v * b.v
            g = h = None
            if order >= 1:
                g = a.g * b.v[..., None] + a.v[..., None] * b.g
            if order >= 2:
                cross = a.g[..., :, None] * b.g[..., None, :]
                cross = cross + np.swapaxes(cross, -1, -2)
                h = a.h * b.v[..., None, None] + a.v[..., None, None] * b.h + cross
            return Jet._raw(v, g, h)
        c = np.asarray(other, dtype=float)
        return Jet._raw(
            self.v * c,
            None if self.g is None else self.g * c[..., None],
            None if self.h is None else self.h * c[..., None, None],
        )

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        u = self.v
        return apply(self, 1.0 / u, -1.0 / u**2, 2.0 / u**3)

    def __truediv__(self, other) -> "Jet":
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return self * (1.0 / np.asarray(other, dtype=float))

    def __rtruediv__(self, other) -> "Jet":
        return self.reciprocal() * other

    def __pow__(self, p) -> "Jet":
        p = float(p)
        u = self.v
        if p == 2.0:
            return self * self
        return apply(self, u**p, p * u ** (p - 1), p * (p - 1) * u ** (p - 2))

    # -- convenience ------------------------------------------------------
    def value(self) -> np.ndarray:
        return self.v

    def grad(self) -> np.ndarray:
        return self.g

    def hess(self) -> np.ndarray:
        return self.h


def _badd(a, b, shape):
    return np.broadcast_to(a, shape) + np.broadcast_to(b, shape)


# ---------------------------------------------------------------------------
# elementwise nonlinear functions (chain rule)
# ---------------------------------------------------------------------------


def apply(u: Jet, f0, f1, f2=None) -> Jet:
    """Compose an elementwise function with known derivatives ``f0, f1, f2``
    (already evaluated at ``u.v``) with the jet ``u``.

    Passing ``f2=None`` caps the result at order 1.
    """
    f0 = np.asarray(f0, dtype=float)
    order = u.order if f2 is not None else min(u.order, 1)
    g = h = None
    if order >= 1:
        f1 = np.asarray(f1, dtype=float)
        g = f1[..., None] * u.g
    if order >= 2:
        f2 = np.asarray(f2, dtype=float)
        h = f2[..., None, None] * (u.g[..., :, None] * u.g[..., None, :]) + f1[..., None, None] * u.h
    return Jet._raw(f0, g, h)


def sqrt(u: Jet) -> Jet:
    r = np.sqrt(u.v)
    return apply(u, r, 0.5 / r, -0.25 / (r * u.v))


def exp(u: Jet) -> Jet:
    e = np.exp(u.v)
    return apply(u, e, e, e)


def log(u: Jet) -> Jet:
    return apply(u, np.log(u.v), 1.0 / u.v, -1.0 / u.v**2)


def sin(u: Jet) -> Jet:
    s, c = np.sin(u.v), np.cos(u.v)
    return apply(u, s, c, -s)


def cos(u: Jet) -> Jet:
    s, c = np.sin(u.v), np.cos(u.v)
    return apply(u, c, -s, -c)


def tanh(u: Jet) -> Jet:
    t = np.tanh(u.v)
    s2 = 1.0 - t * t
    return apply(u, t, s2, -2.0 * t * s2)


def arctan(u: Jet) -> Jet:
    q = 1.0 / (1.0 + u.v**2)
    return apply(u, np.arctan(u.v), q, -2.0 * u.v * q * q)


def absval(u: Jet) -> Jet:
    s = np.sign(u.v)
    return apply(u, np.abs(u.v), s, np.zeros_like(u.v))


# ---------------------------------------------------------------------------
# multilinear algebra
# ---------------------------------------------------------------------------

_LETTERS = string.ascii_letters


@functools.lru_cache(maxsize=1024)
def _jet_subscripts(subscripts: str, jets: tuple) -> tuple:
    """Subscript strings for the value, gradient and Hessian terms of :func:`einsum`."""
    if "->" not in subscripts:
        raise ValueError("einsum on jets needs an explicit output")
    lhs, out = subscripts.replace(" ", "").split("->")
    ins = lhs.split(",")
    used = set(subscripts)
    dy, dz = [c for c in _LETTERS if c not in used][:2]

    def build(extra: dict) -> str:
        terms = [t + extra.get(i, "") for i, t in enumerate(ins)]
        return ",".join(terms) + "->" + out + "".join(extra.values())

    grad = tuple(build({k: dy}) for k in jets)
    hess = tuple(build({k: dy + dz}) for k in jets)
    cross = tuple((k, l, build({k: dy, l: dz})) for a_i, k in enumerate(jets) for l in jets[a_i + 1:])
    return len(ins), grad, hess, cross


def einsum(subscripts: str, *operands) -> Jet:
    """Jet-aware ``numpy.einsum`` (product rule over all jet operands).

    Plain arrays are treated as constants.  Explicit ``->`` output is required
    for multi-operand expressions; ellipses are not supported.
    """
    jets = tuple(i for i, op in enumerate(operands) if isinstance(op, Jet))
    n_in, grad, hess, cross = _jet_subscripts(subscripts, jets)
    if n_in != len(operands):
        raise ValueError("operand count does not match subscripts")
    vals = [op.v if isinstance(op, Jet) else np.asarray(op, dtype=float) for op in operands]
    if not jets:
        return Jet(np.einsum(subscripts, *vals))
    order = min(operands[i].order for i in jets)

    v = np.einsum(subscripts, *vals)
    g = h = None
    if order >= 1:
        g = 0.0
        for k, sub in zip(jets, grad):
            ops = list(vals)
            ops[k] = operands[k].g
            g = g + np.einsum(sub, *ops)
    if order >= 2:
        h = 0.0
        for k, sub in zip(jets, hess):
            ops = list(vals)
            ops[k] = operands[k].h
            h = h + np.einsum(sub, *ops)
        for k, l, sub in cross:
            ops = list(vals)
            ops[k] = operands[k].g
            ops[l] = operands[l].g
            c = np.einsum(sub, *ops)
            h = h + c + np.swapaxes(c, -1, -2)
    return Jet(v, g, h)


def matmul(a, b) -> Jet:
    return einsum("ij,jk->ik", a, b)


def matvec(a, x) -> Jet:
    return einsum("ij,j->i", a, x)


def inv(m: Jet) -> Jet:
    """Inverse of a jet of square matrices."""
    mi = np.linalg.inv(m.v)
    g = h = None
    if m.order >= 1:
        g = -np.einsum("ij,jka,kl->ila", mi, m.g, mi)
    if m.order >= 2:
        # d_a d_b M^-1 = M^-1 M_a M^-1 M_b M^-1 + (a <-> b) - M^-1 M_ab M^-1
        t = np.einsum("ika,klb->ilab", np.einsum("ij,jka->ika", mi, m.g), -g)
        h = t + np.swapaxes(t, -1, -2) - np.einsum("ij,jkab,kl->ilab", mi, m.h, mi)
    return Jet(mi, g, h)


def det(m: Jet) -> Jet:
    """Determinant of a jet of square matrices (Jacobi's formula)."""
    dv = np.linalg.det(m.v)
    g = h = None
    if m.order >= 1:
        mi = np.linalg.inv(m.v)
        a = np.einsum("ij,jka->ika", mi, m.g)
        tr = np.einsum("iia->a", a)
        g = dv * tr
        if m.order >= 2:
            h = dv * (
                tr[:, None] * tr[None, :]
                - np.einsum("ija,jib->ab", a, a)
                + np.einsum("ij,jiab->ab", mi, m.h)
            )
    return Jet(dv, g, h)


def stack(items: Sequence, axis: int = 0) -> Jet:
    """Stack jets (or numbers) along a new leading component axis."""
    js = [x for x in items if isinstance(x, Jet)]
    if not js:
        # plain numbers are exact constants
        return Jet.const(np.stack([np.asarray(x, dtype=float) for x in items], axis=axis))
    order = min(j.order for j in js)
    shape = js[0].shape
    if any(j.shape != shape for j in js):
        shape = np.broadcast_shapes(*[j.shape for j in js])
    zg = np.zeros(shape + (DIM,))
    zh = np.zeros(shape + (DIM, DIM))
    vs, gs, hs = [], [], []
    for x in items:
        if isinstance(x, Jet):
            if x.shape == shape:
                vs.append(x.v)
                gs.append(x.g)
                hs.append(x.h)
            else:
                vs.append(np.broadcast_to(x.v, shape))
                gs.append(None if x.g is None else np.broadcast_to(x.g, shape + (DIM,)))
                hs.append(None if x.h is None else np.broadcast_to(x.h, shape + (DIM, DIM)))
        else:
            vs.append(np.broadcast_to(np.asarray(x, dtype=float), shape))
            gs.append(zg)
            hs.append(zh)
    if axis < 0:
        axis = len(shape) + 1 + axis
    v = np.stack(vs, axis=axis)
    g = np.stack(gs, axis=axis) if order >= 1 else None
    h = np.stack(hs, axis=axis) if order >= 2 else None
    return Jet._raw(v, g, h)


def array(nested) -> Jet:
    """Build a jet tensor from a nested list of jets and numbers."""
    if isinstance(nested, (list, tuple)):
        return stack([array(x) if isinstance(x, (list, tuple)) else x for x in nested])
    return nested


def as_jet(x, order: int = 2) -> Jet:
    return x if isinstance(x, Jet) else Jet.const(x, order)


def seed(p: Iterable[float]) -> list[Jet]:
    """Coordinate jets ``c_i`` at the point ``p`` (unit gradient, zero Hessian)."""
    p = [float(c) for c in p]
    if len(p) != DIM:
        raise ValueError(f"expected {DIM} coordinates, got {len(p)}")
    eye = np.eye(DIM)
    return [Jet(p[i], eye[i], np.zeros((DIM, DIM))) for i in range(DIM)]


def of_scalar_function(fn: Callable[[list[Jet]], Jet], p) -> Jet:
    """Evaluate a coordinate expression at ``p`` as a jet."""
    out = fn(seed(p))
    return as_jet(out)
