"""Shared fixtures and curve factories for the test suite."""
from __future__ import annotations

import numpy as np
import pytest
from scipy.interpolate import CubicSpline

from varistiff import CurveSamples


def circle3d(samples=1000, radius=1.0, z=0.0):
    """Full circle in the z-plane, arc length parameterized, endpoint duplicated."""
    h = 2.0 * np.pi * radius / (samples - 1)
    s = h * np.arange(samples)
    t = s / radius
    pos = np.stack((radius * np.cos(t), radius * np.sin(t), np.full_like(t, z)), axis=1)
    tan = np.stack((-np.sin(t), np.cos(t), np.zeros_like(t)), axis=1)
    return CurveSamples(pos, h, tangents=tan)


def circle2d(samples=1000, radius=1.0):
    h = 2.0 * np.pi * radius / (samples - 1)
    s = h * np.arange(samples)
    t = s / radius
    pos = radius * np.stack((np.cos(t), np.sin(t)), axis=1)
    tan = np.stack((-np.sin(t), np.cos(t)), axis=1)
    return CurveSamples(pos, h, tangents=tan)


def helix(radius=2.0, pitch=1.0, turns=1.0, samples=2000):
    """Arc-length parameterized helix x = (r cos t, r sin t, p t)."""
    c = np.hypot(radius, pitch)
    length = 2.0 * np.pi * turns * c
    h = length / (samples - 1)
    t = (h / c) * np.arange(samples)
    pos = np.stack((radius * np.cos(t), radius * np.sin(t), pitch * t), axis=1)
    tan = np.stack((-radius * np.sin(t), radius * np.cos(t), np.full_like(t, pitch)), axis=1) / c
    return CurveSamples(pos, h, tangents=tan)


def straight_line(samples=64, n=3, h=0.01, direction=None):
    direction = np.eye(n)[0] if direction is None else np.asarray(direction, dtype=float)
    direction = direction / np.linalg.norm(direction)
    s = h * np.arange(samples)
    pos = s[:, None] * direction[None, :]
    tan = np.tile(direction, (samples, 1))
    return CurveSamples(pos, h, tangents=tan)


CURVATURE_CAP = 3.0


class _FourierCurve:
    """Analytic trigonometric curve: base path plus random Fourier modes.

    Everything is evaluated in closed form, so resampled curves are smooth to
    machine precision; spline-based resampling leaves C^2 kinks that third
    difference stencils amplify by 1/h^3.
    """

    def __init__(self, rng, n, modes, amplitude, closed):
        self.n = n
        self.closed = closed
        self.cos_coeff = np.zeros((modes + 1, n))
        self.sin_coeff = np.zeros((modes + 1, n))
        if closed:
            self.cos_coeff[1, 0] += 1.0
            self.sin_coeff[1, 1] += 1.0
        for k in range(1, modes + 1):
            self.cos_coeff[k] += amplitude / k * rng.standard_normal(n)
            self.sin_coeff[k] += amplitude / k * rng.standard_normal(n)

    def position(self, u):
        u = np.atleast_1d(np.asarray(u, dtype=float))
        out = np.zeros((u.size, self.n))
        if not self.closed:
            out[:, 0] = u
        for k in range(1, self.cos_coeff.shape[0]):
            out += np.cos(k * u)[:, None] * self.cos_coeff[k]
            out += np.sin(k * u)[:, None] * self.sin_coeff[k]
        return out

    def velocity(self, u):
        u = np.atleast_1d(np.asarray(u, dtype=float))
        out = np.zeros((u.size, self.n))
        if not self.closed:
            out[:, 0] = 1.0
        for k in range(1, self.cos_coeff.shape[0]):
            out += -k * np.sin(k * u)[:, None] * self.cos_coeff[k]
            out += k * np.cos(k * u)[:, None] * self.sin_coeff[k]
        return out

    def acceleration(self, u):
        u = np.atleast_1d(np.asarray(u, dtype=float))
        out = np.zeros((u.size, self.n))
        for k in range(1, self.cos_coeff.shape[0]):
            out += -k * k * np.cos(k * u)[:, None] * self.cos_coeff[k]
            out += -k * k * np.sin(k * u)[:, None] * self.sin_coeff[k]
        return out

    def max_curvature(self):
        u = np.linspace(0.0, 2.0 * np.pi, 4001)
        vel = self.velocity(u)
        acc = self.acceleration(u)
        speed = np.linalg.norm(vel, axis=1)
        if self.n == 2:
            cross = np.abs(vel[:, 0] * acc[:, 1] - vel[:, 1] * acc[:, 0])
        else:
            cross = np.linalg.norm(np.cross(vel, acc), axis=1)
        return float(np.max(cross / speed**3)), float(np.min(speed))

    def arclength_samples(self, samples):
        """Uniform arc-length samples via RK4 on du/ds = 1/|velocity(u)|."""
        dense = np.linspace(0.0, 2.0 * np.pi, 20001)
        speed = np.linalg.norm(self.velocity(dense), axis=1)
        total = float(np.trapezoid(speed, dense))
        h = total / (samples - 1)
        substeps = 4

        def rate(u):
            return 1.0 / np.linalg.norm(self.velocity(u)[0])

        u_values = np.empty(samples)
        u_values[0] = 0.0
        u = 0.0
        hh = h / substeps
        for i in range(samples - 1):
            for _ in range(substeps):
                k1 = rate(u)
                k2 = rate(u + 0.5 * hh * k1)
                k3 = rate(u + 0.5 * hh * k2)
                k4 = rate(u + hh * k3)
                u += hh / 6.0 * (k1 + 2.0 * (k2 + k3) + k4)
            u_values[i + 1] = u
        pos = self.position(u_values)
        vel = self.velocity(u_values)
        tan = vel / np.linalg.norm(vel, axis=1)[:, None]
        return CurveSamples(pos, h, tangents=tan)


def fourier_loop(rng, n=3, samples=1200, modes=2, amplitude=0.16, cap=CURVATURE_CAP):
    """Random smooth closed curve, uniformly resampled by arc length.

    Draws are rejected (deterministically, from the same rng stream) until the
    curvature stays below a cap and the parameterization is nowhere close to
    singular, which keeps the chord-length grid invariant satisfied.
    """
    for _ in range(64):
        curve = _FourierCurve(rng, n, modes, amplitude, closed=True)
        kappa_max, speed_min = curve.max_curvature()
        if kappa_max <= cap and speed_min >= 0.3:
            return curve.arclength_samples(samples)
    raise RuntimeError("could not draw a tame closed curve")


def fourier_arc(rng, n=3, samples=1200, modes=2, amplitude=0.16, cap=CURVATURE_CAP):
    """Random smooth open curve, curvature-capped like fourier_loop."""
    for _ in range(64):
        curve = _FourierCurve(rng, n, modes, amplitude, closed=False)
        kappa_max, speed_min = curve.max_curvature()
        if kappa_max <= cap and speed_min >= 0.3:
            return curve.arclength_samples(samples)
    raise RuntimeError("could not draw a tame open curve")


def smooth_bump(grid, center, width):
    """C-infinity bump supported on |s - center| < width, peak value 1."""
    x = (np.asarray(grid) - center) / width
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - x[inside] ** 2))
    return out


def compact_variation(curve, rng):
    """Random smooth variation field supported away from the curve ends.

    Wide bumps keep the high-order derivatives of the field moderate, which the
    second-order finite-difference cross-checks of the variational fields need.
    """
    grid = curve.grid()
    length = grid[-1] - grid[0]
    center = grid[0] + length * rng.uniform(0.42, 0.58)
    width = length * rng.uniform(0.24, 0.3)
    bump = smooth_bump(grid, center, width)
    base = rng.standard_normal(curve.n)
    wobble = rng.standard_normal(curve.n)
    field = base[None, :] + 0.3 * np.sin(2.0 * grid / length * np.pi)[:, None] * wobble[None, :]
    return bump[:, None] * field


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
