"""One-variable profile functions with exact derivatives up to order 3."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as npoly

from .. import jets
from ..jets import Jet

MAX_ORDER = 3


def _check_order(n: int) -> None:
    if n > MAX_ORDER:
        raise ValueError(f"derivatives above order {MAX_ORDER} are not available")


class Profile:
    """A smooth function of one variable.

    Subclasses implement :meth:`derivs`, returning ``[f, f', ..., f^(n)]``
    at a float.  Calling a profile on a :class:`Jet` composes it exactly to
    order 2.
    """

    def derivs(self, z: float, n: int = 2) -> np.ndarray:  # pragma: no cover - abstract
        raise NotImplementedError

    def __call__(self, u):
        if isinstance(u, Jet):
            d = self.derivs(float(u.v), 2)
            return jets.apply(u, d[0], d[1], d[2])
        return float(self.derivs(float(u), 0)[0])

    def value(self, z: float) -> float:
        return float(self.derivs(z, 0)[0])

    def prime(self) -> "Profile":
        return Shifted(self, 1)

    def val_der(self, z: float) -> tuple[float, float]:
        d = self.derivs(z, 1)
        return float(d[0]), float(d[1])


@dataclass
class Shifted(Profile):
    """The ``k``-th derivative of a profile."""

    base: Profile
    k: int

    def derivs(self, z, n=2):
        return self.base.derivs(z, n + self.k)[self.k:]


class Poly(Profile):
    """Polynomial with coefficients lowest degree first."""

    def __init__(self, coeffs):
        self.coeffs = [float(c) for c in coeffs]
        c = np.array(self.coeffs)
        self._d = [c]
        for _ in range(MAX_ORDER):
            c = npoly.polyder(c) if c.size > 1 else np.zeros(1)
            self._d.append(c)

    def derivs(self, z, n=2):
        _check_order(n)
        return np.array([npoly.polyval(z, self._d[k]) for k in range(n + 1)])

    def __repr__(self):
        return f"Poly({self.coeffs})"

    def __neg__(self):
        return Poly([-c for c in self.coeffs])


def sphere_profiles(lam: float, mu: float) -> tuple[Poly, Poly]:
    """``A(z) = -(z^2 - lam^2/4)(z^2 - mu^2/4)`` and ``B = -A``."""
    a, b = lam**2 / 4.0, mu**2 / 4.0
    A = Poly([-a * b, 0.0, a + b, 0.0, -1.0])
    return A, -A


class Bump(Profile):
    """``exp(1 - 1/(1 - s^2))`` with ``s = (2z - a - b)/(b - a)``; zero outside ``(a, b)``."""

    def __init__(self, a: float, b: float):
        if not b > a:
            raise ValueError("bump needs a < b")
        self.a, self.b = float(a), float(b)

    def derivs(self, z, n=2):
        _check_order(n)
        out = np.zeros(n + 1)
        k = 2.0 / (self.b - self.a)
        s = (2.0 * z - self.a - self.b) / (self.b - self.a)
        if abs(s) >= 1.0:
            return out
        u = 1.0 / (1.0 - s * s)
        e = np.exp(1.0 - u)
        u1 = 2 * s * u**2
        u2 = 2 * u**2 + 8 * s**2 * u**3
        u3 = 24 * s * u**3 + 48 * s**3 * u**4
        ds = [e, -u1 * e, (u1**2 - u2) * e, (-u1**3 + 3 * u1 * u2 - u3) * e]
        for i in range(n + 1):
            out[i] = ds[i] * k**i
        return out


class Sum(Profile):
    def __init__(self, base: Profile, other: Profile, eps: float):
        self.base, self.other, self.eps = base, other, float(eps)

    def derivs(self, z, n=2):
        return self.base.derivs(z, n) + self.eps * self.other.derivs(z, n)


class TanhShift(Profile):
    """``a + b tanh(c z)``."""

    def __init__(self, a: float = 2.0, b: float = 1.0, c: float = 1.0):
        self.a, self.b, self.c = float(a), float(b), float(c)

    def derivs(self, z, n=2):
        _check_order(n)
        T = np.tanh(self.c * z)
        s = 1.0 - T * T
        raw = [T, s, -2 * T * s, s * (6 * T * T - 2)]
        out = np.array([self.b * raw[i] * self.c**i for i in range(n + 1)])
        out[0] += self.a
        return out


def min_on(profile: Profile, lo: float, hi: float, n: int = 2001) -> float:
    """Minimum of a profile sampled on a uniform grid of the closed interval."""
    return float(min(profile.value(z) for z in np.linspace(lo, hi, n)))
