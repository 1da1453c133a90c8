"""Bending stiffness profiles with exact first and second derivatives.

A profile is any object providing

    evaluate(s)      -> (rho, rho', rho'') at a scalar arc length
    values(s_array)  -> the same three quantities as arrays
    shift(delta)     -> new profile with rho_new(s) = rho_old(s + delta)

Profiles are immutable; evaluation is pure and safe to call concurrently.
Positivity is enforced by sampling (every evaluation checks rho > 0), not
symbolically, because sums of bumps have no closed-form minima.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import ClassVar

import numpy as np


class StiffnessDomainError(ValueError):
    """The stiffness is non-positive somewhere it was evaluated."""


@dataclass(frozen=True)
class StiffnessProfile:
    """Base class for bending-stiffness profiles."""

    kind: ClassVar[str] = "abstract"

    def _raw(self, s):
        raise NotImplementedError

    def _raw_many(self, s):
        raise NotImplementedError

    def evaluate(self, s):
        """Return (rho, rho', rho'') at arc length s; rho must be positive."""
        rho, d1, d2 = self._raw(float(s))
        if not rho > 0.0:
            raise StiffnessDomainError(
                f"stiffness must be positive, got {rho:.6g} at s={float(s):.6g}"
            )
        return rho, d1, d2

    def values(self, s):
        """Vectorized evaluate: three arrays (rho, rho', rho'') over `s`."""
        s = np.asarray(s, dtype=float)
        rho, d1, d2 = self._raw_many(s)
        if np.any(rho <= 0.0):
            i = int(np.argmin(rho))
            raise StiffnessDomainError(
                f"stiffness must be positive, got {rho[i]:.6g} at s={s.reshape(-1)[i]:.6g}"
            )
        return rho, d1, d2

    def value(self, s):
        return self.evaluate(s)[0]

    def shift(self, delta):
        raise NotImplementedError

    def to_config(self):
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantProfile(StiffnessProfile):
    c: float

    kind: ClassVar[str] = "constant"

    def _raw(self, s):
        return self.c, 0.0, 0.0

    def _raw_many(self, s):
        z = np.zeros_like(s)
        return np.full_like(s, self.c), z, z

    def shift(self, delta):
        return self

    def to_config(self):
        return {"kind": "constant", "c": self.c}


@dataclass(frozen=True)
class SinusoidalProfile(StiffnessProfile):
    """rho(s) = A sin(s + xi) + c, with the period fixed at 2*pi."""

    A: float
    c: float
    xi: float = 0.0

    kind: ClassVar[str] = "sinusoidal"

    def _raw(self, s):
        u = s + self.xi
        return self.A * math.sin(u) + self.c, self.A * math.cos(u), -self.A * math.sin(u)

    def _raw_many(self, s):
        u = s + self.xi
        sn = self.A * np.sin(u)
        return sn + self.c, self.A * np.cos(u), -sn

    def shift(self, delta):
        return SinusoidalProfile(self.A, self.c, self.xi + delta)

    def to_config(self):
        return {"kind": "sinusoidal", "A": self.A, "c": self.c, "xi": self.xi}


@dataclass(frozen=True)
class GaussianBumpProfile(StiffnessProfile):
    """rho(s) = c + A exp(-(s - xi)^2 / (2 sigma^2))."""

    A: float
    c: float
    sigma: float
    xi: float = 0.0

    kind: ClassVar[str] = "gaussian_bump"

    def __post_init__(self):
        if self.sigma <= 0.0:
            raise ValueError("sigma must be positive")

    def _raw(self, s):
        u = s - self.xi
        s2 = self.sigma * self.sigma
        g = self.A * math.exp(-u * u / (2.0 * s2))
        return self.c + g, -u * g / s2, g * (u * u - s2) / (s2 * s2)

    def _raw_many(self, s):
        u = s - self.xi
        s2 = self.sigma * self.sigma
        g = self.A * np.exp(-u * u / (2.0 * s2))
        return self.c + g, -u * g / s2, g * (u * u - s2) / (s2 * s2)

    def shift(self, delta):
        # rho_old(s + delta) moves the bump center to xi - delta
        return GaussianBumpProfile(self.A, self.c, self.sigma, self.xi - delta)

    def to_config(self):
        return {
            "kind": "gaussian_bump",
            "A": self.A,
            "c": self.c,
            "sigma": self.sigma,
            "xi": self.xi,
        }


@dataclass(frozen=True)
class SumProfile(StiffnessProfile):
    children: tuple

    kind: ClassVar[str] = "sum"

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if not self.children:
            raise ValueError("sum profile needs at least one child")

    def _raw(self, s):
        rho = d1 = d2 = 0.0
        for child in self.children:
            r, a, b = child._raw(s)
            rho += r
            d1 += a
            d2 += b
        return rho, d1, d2

    def _raw_many(self, s):
        rho = np.zeros_like(s)
        d1 = np.zeros_like(s)
        d2 = np.zeros_like(s)
        for child in self.children:
            r, a, b = child._raw_many(s)
            rho += r
            d1 += a
            d2 += b
        return rho, d1, d2

    def shift(self, delta):
        return SumProfile(tuple(child.shift(delta) for child in self.children))

    def to_config(self):
        return {"kind": "sum", "children": [child.to_config() for child in self.children]}


@dataclass(frozen=True)
class ScaledProfile(StiffnessProfile):
    """factor * base; keeps the evaluate/shift interface of its base."""

    factor: float
    base: StiffnessProfile

    kind: ClassVar[str] = "scaled"

    def _raw(self, s):
        r, a, b = self.base._raw(s)
        return self.factor * r, self.factor * a, self.factor * b

    def _raw_many(self, s):
        r, a, b = self.base._raw_many(s)
        return self.factor * r, self.factor * a, self.factor * b

    def shift(self, delta):
        return ScaledProfile(self.factor, self.base.shift(delta))

    def to_config(self):
        return {"kind": "scaled", "factor": self.factor, "base": self.base.to_config()}


@dataclass(frozen=True)
class SquaredProfile(StiffnessProfile):
    """base(s)^2 with chain-rule derivatives; used for pendulum changes of variables."""

    base: StiffnessProfile

    kind: ClassVar[str] = "squared"

    def _raw(self, s):
        r, a, b = self.base._raw(s)
        return r * r, 2.0 * r * a, 2.0 * (a * a + r * b)

    def _raw_many(self, s):
        r, a, b = self.base._raw_many(s)
        return r * r, 2.0 * r * a, 2.0 * (a * a + r * b)

    def shift(self, delta):
        return SquaredProfile(self.base.shift(delta))

    def to_config(self):
        return {"kind": "squared", "base": self.base.to_config()}


def check_positive(profile, s_grid):
    """Validate rho > 0 on a sampling grid; raises StiffnessDomainError if not.

    The grid should be the caller's integration grid: configuration errors are
    defined by the stiffness dipping non-positive anywhere the solver looks.
    """
    profile.values(np.asarray(s_grid, dtype=float))


_PROFILE_KEYS = {
    "constant": {"c"},
    "sinusoidal": {"A", "c", "xi"},
    "gaussian_bump": {"A", "c", "sigma", "xi"},
    "sum": {"children"},
}


def profile_from_config(obj, path="profile"):
    """Build a profile from a config mapping like {"kind":"sinusoidal","A":1,...}.

    Unknown or missing keys raise ValueError naming the offending key.
    """
    if not isinstance(obj, dict):
        raise ValueError(f"{path}: expected an object, got {type(obj).__name__}")
    if "kind" not in obj:
        raise ValueError(f"{path}.kind: missing required key")
    kind = obj["kind"]
    if kind not in _PROFILE_KEYS:
        raise ValueError(f"{path}.kind: unknown profile kind {kind!r}")
    extra = set(obj) - _PROFILE_KEYS[kind] - {"kind"}
    if extra:
        raise ValueError(f"{path}.{sorted(extra)[0]}: unknown key for {kind} profile")

    def need(key, default=None):
        if key in obj:
            value = obj[key]
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ValueError(f"{path}.{key}: expected a number")
            return float(value)
        if default is None:
            raise ValueError(f"{path}.{key}: missing required key")
        return default

    if kind == "constant":
        return ConstantProfile(need("c"))
    if kind == "sinusoidal":
        return SinusoidalProfile(need("A"), need("c"), need("xi", 0.0))
    if kind == "gaussian_bump":
        return GaussianBumpProfile(need("A"), need("c"), need("sigma"), need("xi", 0.0))
    children = obj["children"]
    if not isinstance(children, list) or not children:
        raise ValueError(f"{path}.children: expected a non-empty array")
    return SumProfile(
        tuple(
            profile_from_config(child, f"{path}.children[{i}]")
            for i, child in enumerate(children)
        )
    )
