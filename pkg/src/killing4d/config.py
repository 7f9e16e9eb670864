"""Run configuration: JSON schema, loading, and geometry assembly."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Callable

import jsonschema
import numpy as np

from . import jets
from .ansatz.ambitoric import ProfilePair, build_hyperbolic_ambitoric
from .ansatz.calabi import CalabiSpec, build_calabi
from .ansatz.product import ProductSpec, build_product
from .ansatz.profiles import Poly, Profile, TanhShift, sphere_profiles
from .ansatz.sphere import SphereSpec, build_deformed_sphere, build_round_sphere, sphere_profile_pair
from .chart import ConfigurationError, Domain, Field
from .riemann import Geometry

SUITES = (
    "star-killing", "kahler", "curvature-closed-forms", "separation", "killing-fields",
    "momenta", "killing-tensor", "deformation", "calabi-family", "product",
    "sphere-formulas", "classifier",
)
FAMILIES = ("ambitoric", "sphere", "deformed-sphere", "calabi", "product")

_interval = {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2}
_coeffs = {"type": "array", "items": {"type": "number"}, "minItems": 1}

SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "killing4d run configuration",
    "type": "object",
    "required": ["geometry"],
    "additionalProperties": False,
    "properties": {
        "geometry": {
            "type": "object",
            "required": ["family"],
            "additionalProperties": False,
            "properties": {
                "family": {"enum": list(FAMILIES)},
                "A": _coeffs,
                "B": _coeffs,
                "lambda": {"type": "number", "minimum": 0},
                "mu": {"type": "number", "exclusiveMinimum": 0},
                "eps_A": {"type": "number"},
                "eps_B": {"type": "number"},
                "collar": {"type": "number", "exclusiveMinimum": 0},
                "k": {"type": "number"},
                "phi": {"description": "calabi: [a, b, c] for a + b tanh(c t); product: coefficients in u",
                        "type": "array", "items": {"type": "number"}},
                "curve": {"enum": ["flat", "round"]},
                "curve2": {"enum": ["flat", "round"]},
            },
        },
        "domain": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "bounds": {"type": "array", "items": _interval, "minItems": 4, "maxItems": 4},
                "margin": {"type": "number", "minimum": 0},
            },
        },
        "samples": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "suites": {"type": "array", "items": {"enum": list(SUITES)}, "uniqueItems": True},
        "tolerances": {"type": "object", "additionalProperties": {"type": "number", "exclusiveMinimum": 0}},
        "metric_perturbation": {"type": "number",
                                "description": "negative control: g -> (1 + eps c0 c1) g"},
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"report": {"type": "string"}, "dump": {"type": "string"}},
        },
    },
}


def load_config(text: str) -> dict:
    """Parse and validate; :class:`ConfigurationError` carries line/column or schema path."""
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}") from None
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(cfg), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        where = "/".join(str(x) for x in e.absolute_path) or "<root>"
        raise ConfigurationError(f"config field {where}: {e.message}")
    return cfg


@dataclass
class Case:
    """A constructed geometry plus the closed forms known for it."""

    family: str
    geo: Geometry
    psi: Field
    domain: Domain
    model: Any
    profiles: ProfilePair | None = None  # closed-form A, B when known
    expected: tuple = ()  # (kind, c, subcase)
    ambitoric: bool = False  # x, y are independent on the domain
    params: dict = field(default_factory=dict)


def _bounds(cfg: dict, default: Domain) -> Domain:
    d = cfg.get("domain", {})
    b = d.get("bounds", default.bounds)
    m = d.get("margin", default.margin)
    return Domain(tuple(tuple(x) for x in b), m, default.constraints)


def _perturbed(geo: Geometry, eps: float) -> Geometry:
    def g(p):
        c = jets.seed(p)
        return geo.metric.unchecked(p) * (1.0 + eps * c[0] * c[1])
    return Geometry(Field(g, geo.domain, "metric", f"{geo.metric.name} (perturbed {eps:g})"),
                    geo.orientation, geo.domain, geo.name + "-perturbed")


def _expected_sphere(lam: float, mu: float) -> tuple:
    if lam == 0:
        return ("decomposable", None, None)
    if lam == mu:
        return ("calabi", lam * lam / 4, "f+ + f-")
    return ("ambitoric", None, None)


def build_case(cfg: dict) -> Case:
    """Construct the geometry named in ``cfg["geometry"]``."""
    gc = cfg["geometry"]
    fam = gc["family"]
    try:
        case = _BUILDERS[fam](gc, cfg)
    except (ValueError, ArithmeticError) as e:
        raise ConfigurationError(f"cannot build {fam} geometry: {e}") from e
    eps = cfg.get("metric_perturbation", 0.0)
    if eps:
        case.geo = _perturbed(case.geo, eps)
    return case


def _ambitoric(gc, cfg) -> Case:
    A, B = Poly(gc.get("A", [1.0])), Poly(gc.get("B", [1.0]))
    d = cfg.get("domain", {}).get("bounds", [[1.0, 1.5], [0.2, 0.6], [-1, 1], [-1, 1]])
    spec = ProfilePair(A, B, tuple(d[0]), tuple(d[1]), tuple(d[2]), tuple(d[3]),
                       cfg.get("domain", {}).get("margin", 1e-2))
    m = build_hyperbolic_ambitoric(spec)
    return Case("ambitoric", m.geo, m.psi, m.domain, m, spec, ("ambitoric", None, None), True)


def _sphere(gc, cfg) -> Case:
    lam, mu = float(gc.get("lambda", 1.0)), float(gc.get("mu", 2.0))
    spec = SphereSpec(lam, mu)
    if "domain" in cfg:
        dom = _bounds(cfg, Domain(spec.box, spec.margin))
        spec = SphereSpec(lam, mu, dom.bounds, dom.margin)
    m = build_round_sphere(spec)
    prof = sphere_profile_pair(spec) if 0 < lam < mu else None
    return Case("sphere", m.geo, m.psi, m.domain, m, prof, _expected_sphere(lam, mu), prof is not None,
                {"lambda": lam, "mu": mu})


def _deformed(gc, cfg) -> Case:
    lam, mu = float(gc.get("lambda", 1.0)), float(gc.get("mu", 2.0))
    spec = SphereSpec(lam, mu, eps_A=float(gc.get("eps_A", 0.01)), eps_B=float(gc.get("eps_B", 0.0)),
                      collar=float(gc.get("collar", 0.05)))
    m = build_deformed_sphere(spec)
    return Case("deformed-sphere", m.geo, m.psi, m.domain, m, m.spec, ("ambitoric", None, None), True,
                {"lambda": lam, "mu": mu, "spec": spec})


def _calabi(gc, cfg) -> Case:
    k = float(gc.get("k", 2.0))
    phi = TanhShift(*gc.get("phi", [2.0, 1.0, 1.0]))
    kw = {}
    if "domain" in cfg:
        b = cfg["domain"].get("bounds")
        if b:
            kw = dict(u_range=tuple(b[0]), v_range=tuple(b[1]), t_range=tuple(b[2]), s_range=tuple(b[3]))
        if "margin" in cfg["domain"]:
            kw["margin"] = cfg["domain"]["margin"]
    elif k < 0:
        kw["t_range"] = (-2.0, -0.2)
    spec = CalabiSpec(phi=phi, k=k, curve=gc.get("curve", "flat"), **kw)
    m = build_calabi(spec)
    from .ansatz.calabi import expected_subcase

    sub, val = expected_subcase(spec)
    exp = ("calabi", val * val / 4, sub) if k != 0 else ("parallel", None, None)
    return Case("calabi", m.geo, m.psi, m.domain, m, None, exp, False, {"k": k})


def _product(gc, cfg) -> Case:
    coeffs = gc.get("phi", [2.0, 1.0])
    prof = Poly(coeffs)

    def phi(u, v):
        return prof(u) if isinstance(u, jets.Jet) else prof.value(u)

    kw = {}
    if "domain" in cfg:
        b = cfg["domain"].get("bounds")
        if b:
            kw = dict(u_range=tuple(b[0]), v_range=tuple(b[1]), p_range=tuple(b[2]), q_range=tuple(b[3]))
        if "margin" in cfg["domain"]:
            kw["margin"] = cfg["domain"]["margin"]
    spec = ProductSpec(phi=phi, curve1=gc.get("curve", "flat"), curve2=gc.get("curve2", "flat"), **kw)
    m = build_product(spec)
    return Case("product", m.geo, m.psi, m.domain, m, None, ("decomposable", None, None), False)


_BUILDERS: dict[str, Callable] = {
    "ambitoric": _ambitoric,
    "sphere": _sphere,
    "deformed-sphere": _deformed,
    "calabi": _calabi,
    "product": _product,
}
