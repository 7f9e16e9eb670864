"""Chart plumbing: domains, jet-valued fields, sampling and a finite-difference oracle."""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.stats import qmc

from . import jets
from .jets import Jet

DIM = 4
DEFAULT_MARGIN = 1e-2
# balances O(h^4) truncation on steep bumps against eps/h^2 rounding of long chains
FD_STEP = 8e-4


class DomainError(ValueError):
    """A point lies outside a domain, or too close to a singular locus."""


class ConfigurationError(ValueError):
    """A domain or sampling request cannot be satisfied."""


class NumericalError(ArithmeticError):
    """A numerical precondition failed (conditioning, eigenvalue clustering, quadrature)."""


class ConstructionError(ValueError):
    """Constructor inputs violate their preconditions."""


@dataclass(frozen=True)
class Constraint:
    """Named scalar slack ``fn(p)``; a point is admissible when ``fn(p) >= margin``."""

    name: str
    fn: Callable[[np.ndarray], float]


@dataclass(frozen=True)
class Domain:
    """Open coordinate box, optionally cut down by predicate constraints.

    ``kind`` is ``"rectangle"`` when there are no constraints and
    ``"predicate"`` otherwise.  Sampling keeps every point at least
    ``margin`` inside each bound and each constraint.
    """

    bounds: tuple
    margin: float = DEFAULT_MARGIN
    constraints: tuple = ()

    def __post_init__(self):
        b = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        if len(b) != DIM:
            raise ConfigurationError(f"domain needs {DIM} intervals, got {len(b)}")
        object.__setattr__(self, "bounds", b)
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if self.margin < 0:
            raise ConfigurationError("margin must be non-negative")

    @property
    def kind(self) -> str:
        return "predicate" if self.constraints else "rectangle"

    def with_margin(self, margin: float) -> "Domain":
        return Domain(self.bounds, margin, self.constraints)

    def with_constraints(self, *extra: Constraint) -> "Domain":
        return Domain(self.bounds, self.margin, self.constraints + tuple(extra))

    def violation(self, p, margin: float = 0.0) -> str | None:
        """Description of the first violated condition, or ``None``."""
        p = np.asarray(p, dtype=float)
        if p.shape != (DIM,) or not np.all(np.isfinite(p)):
            return f"point {p!r} is not a finite 4-vector"
        for i, (lo, hi) in enumerate(self.bounds):
            if not (lo + margin <= p[i] <= hi - margin) or (margin == 0 and not lo < p[i] < hi):
                return f"c{i}={p[i]:.6g} outside ({lo:.6g}, {hi:.6g}) with margin {margin:g}"
        for c in self.constraints:
            val = float(c.fn(p))
            if not val >= margin or (margin == 0 and not val > 0):
                return f"constraint '{c.name}' = {val:.6g} below margin {margin:g}"
        return None

    def contains(self, p, margin: float = 0.0) -> bool:
        return self.violation(p, margin) is None

    def check(self, p, margin: float = 0.0) -> None:
        msg = _memo_violation(self, tuple(float(c) for c in p), margin)
        if msg is not None:
            raise DomainError(msg)


@lru_cache(maxsize=65536)
def _memo_violation(d: Domain, p: tuple, margin: float) -> str | None:
    # nested fields re-check the same point many times
    return d.violation(p, margin)


class Field:
    """A tensor field on a chart, evaluated as jets.

    ``fn`` maps a point tuple to a :class:`Jet` (or a number, promoted to a
    constant jet).  Results are memoised per point; evaluation must be pure.
    ``kind`` is informational (``scalar``, ``oneform``, ``vector``,
    ``twoform``, ``endo``, ``metric``, ``sym2``).
    """

    def __init__(self, fn: Callable[[tuple], Jet], domain: Domain | None = None,
                 kind: str = "scalar", name: str = "", cache: int = 8192):
        self.fn = fn
        self.domain = domain
        self.kind = kind
        self.name = name or getattr(fn, "__name__", "field")
        self._cached = lru_cache(maxsize=cache)(self._raw)

    def _raw(self, p: tuple) -> Jet:
        out = self.fn(p)
        return out if isinstance(out, Jet) else Jet.const(out)

    def __call__(self, p) -> Jet:
        key = tuple(float(c) for c in p)
        if self.domain is not None:
            self.domain.check(key)
        return self._cached(key)

    def unchecked(self, p) -> Jet:
        return self._cached(tuple(float(c) for c in p))

    def map(self, g: Callable[[Jet], Jet], kind: str | None = None, name: str = "") -> "Field":
        parent = self
        return Field(lambda p: g(parent.unchecked(p)), self.domain, kind or self.kind, name)

    def __repr__(self) -> str:
        return f"Field({self.name!r}, kind={self.kind})"


def coordinate_field(fn: Callable[[list], Jet], domain: Domain | None = None,
                     kind: str = "scalar", name: str = "") -> Field:
    """Field given as an expression in the coordinate jets ``c[0..3]``."""
    return Field(lambda p: jets.as_jet(fn(jets.seed(p))), domain, kind, name or fn.__name__)


def jet_eval(f: Field, p) -> Jet:
    """All components of ``f`` at ``p`` as a jet (domain-checked)."""
    return f(p)


def fd_oracle(f: Field, p, order: int = 1, h: float | None = None) -> np.ndarray:
    """Central differences of the field values with one Richardson step.

    ``order=1`` returns the gradient (derivative axis last), ``order=2`` the
    Hessian.  Mixed partials come from polarising second differences along
    ``e_i + e_j``, so the Hessian takes 41 evaluations, 17 of them shared with
    the gradient through the field memo.  With base step ``h`` (default
    ``8e-4 * max(1, |p_i|)`` per axis) the truncation error is O(h^4) and
    rounding contributes about ``eps/h`` resp. ``eps/h^2``: first partials are
    good to ~1e-12 and second partials to ~1e-8 for O(1) fields with
    moderate higher derivatives.  Requires a margin of at least ``h`` around
    ``p`` in every coordinate.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    p = np.asarray(p, dtype=float)
    steps = np.array([FD_STEP * max(1.0, abs(c)) for c in p]) if h is None else np.full(DIM, float(h))
    if f.domain is not None:
        for i in range(DIM):
            for s in (-1.0, 1.0):
                q = p.copy()
                q[i] += s * steps[i]
                msg = f.domain.violation(q)
                if msg is not None:
                    raise DomainError(f"insufficient margin for finite differences: {msg}")

    def val(q):
        return np.asarray(f.unchecked(q).v, dtype=float)

    def shift(*moves):
        q = p.copy()
        for i, d in moves:
            q[i] += d
        return val(q)

    f0 = val(p)
    if order == 1:
        out = np.zeros(f0.shape + (DIM,))
        for i in range(DIM):
            d = []
            for hh in (steps[i], steps[i] / 2):
                d.append((shift((i, hh)) - shift((i, -hh))) / (2 * hh))
            out[..., i] = (4 * d[1] - d[0]) / 3
        return out

    def second(v):
        # d^2/dr^2 f(p + r v) at r = 0, Richardson over r = 1, 1/2
        est = []
        for r in (1.0, 0.5):
            plus = shift(*[(i, r * c) for i, c in v])
            minus = shift(*[(i, -r * c) for i, c in v])
            est.append((plus - 2 * f0 + minus) / r**2)
        return (4 * est[1] - est[0]) / 3

    out = np.zeros(f0.shape + (DIM, DIM))
    for i in range(DIM):
        out[..., i, i] = second([(i, steps[i])]) / steps[i] ** 2
    for i in range(DIM):
        for j in range(i + 1, DIM):
            # polarisation along e_i + e_j: f_ij = (D_v^2 - s_i^2 f_ii - s_j^2 f_jj) / (2 s_i s_j)
            dv = second([(i, steps[i]), (j, steps[j])])
            r = (dv - steps[i] ** 2 * out[..., i, i] - steps[j] ** 2 * out[..., j, j]) / (2 * steps[i] * steps[j])
            out[..., i, j] = r
            out[..., j, i] = r
    return out


def sample_points(d: Domain, n: int, seed: int = 0, max_draws: int = 200) -> list[np.ndarray]:
    """``n`` deterministic low-discrepancy points inside ``d`` with its margin.

    A seeded scrambled Halton sequence on the shrunk box is filtered through
    the constraints.  Raises :class:`ConfigurationError` if the admissible
    set looks empty.
    """
    if n < 1:
        raise ConfigurationError("need at least one sample point")
    lo = np.array([b[0] for b in d.bounds]) + d.margin
    hi = np.array([b[1] for b in d.bounds]) - d.margin
    if np.any(hi <= lo):
        raise ConfigurationError("domain is empty after applying the margin")
    sampler = qmc.Halton(d=DIM, scramble=True, seed=np.random.default_rng(seed))
    out: list[np.ndarray] = []
    batch = max(64, 2 * n)
    for _ in range(max_draws):
        pts = qmc.scale(sampler.random(batch), lo, hi)
        for q in pts:
            if d.contains(q, d.margin):
                out.append(q)
                if len(out) == n:
                    return out
    if not out:
        raise ConfigurationError("no admissible sample points: domain constraints look empty")
    raise ConfigurationError(f"only {len(out)} of {n} admissible sample points found")


def grid_points(d: Domain, nx: int, ny: int, fixed: Sequence[float] | None = None) -> list[np.ndarray]:
    """Regular ``nx`` x ``ny`` grid over the first two coordinates, the last two
    held at ``fixed`` (default: box midpoints).  Inadmissible nodes are dropped."""
    lo = np.array([b[0] for b in d.bounds]) + d.margin
    hi = np.array([b[1] for b in d.bounds]) - d.margin
    mid = 0.5 * (lo + hi)
    c2, c3 = (mid[2], mid[3]) if fixed is None else fixed
    out = []
    for a in np.linspace(lo[0], hi[0], nx):
        for b in np.linspace(lo[1], hi[1], ny):
            q = np.array([a, b, c2, c3])
            if d.contains(q, d.margin):
                out.append(q)
    return out
