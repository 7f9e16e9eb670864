"""Analytic constructors for the four geometry families."""

from .ambitoric import AmbitoricModel, ProfilePair, build_hyperbolic_ambitoric
from .profiles import Bump, Poly, Profile, TanhShift, sphere_profiles
from .sphere import SphereSpec, build_deformed_sphere, build_round_sphere

__all__ = [
    "AmbitoricModel", "ProfilePair", "build_hyperbolic_ambitoric",
    "Bump", "Poly", "Profile", "TanhShift", "sphere_profiles",
    "SphereSpec", "build_deformed_sphere", "build_round_sphere",
]
