"""Discrete arc-length curves: derivatives, parallel frames, holonomy, energies.

Curves are sampled on a uniform arc-length grid.  All finite differences are
second-order accurate: central stencils in the interior, one-sided stencils of
the same order at the ends, so residual evaluators stay meaningful up to the
boundary.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def _dot(u, v):
    return np.einsum("ij,ij->i", u, v)


def finite_difference(values, h, order):
    """Differentiate uniformly sampled values (m,) or (m, k) w.r.t. the grid.

    order in {1, 2, 3}; needs at least order + 2 samples.  Interior stencils
    are central; boundary rows use one-sided or offset stencils of matching
    (second) order.
    """
    f = np.asarray(values, dtype=float)
    squeeze = f.ndim == 1
    if squeeze:
        f = f[:, None]
    m = f.shape[0]
    if order not in (1, 2, 3):
        raise ValueError(f"unsupported derivative order {order}")
    if m < order + 2:
        raise ValueError(f"need at least {order + 2} samples for order {order}, got {m}")
    out = np.empty_like(f)
    if order == 1:
        out[1:-1] = (f[2:] - f[:-2]) / (2.0 * h)
        out[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h)
        out[-1] = (3.0 * f[-1] - 4.0 * f[-2] + f[-3]) / (2.0 * h)
    elif order == 2:
        h2 = h * h
        out[1:-1] = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / h2
        out[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / h2
        out[-1] = (2.0 * f[-1] - 5.0 * f[-2] + 4.0 * f[-3] - f[-4]) / h2
    else:
        h3 = 2.0 * h * h * h
        out[2:-2] = (-f[:-4] + 2.0 * f[1:-3] - 2.0 * f[3:-1] + f[4:]) / h3
        out[0] = (-5.0 * f[0] + 18.0 * f[1] - 24.0 * f[2] + 14.0 * f[3] - 3.0 * f[4]) / h3
        out[1] = (-3.0 * f[0] + 10.0 * f[1] - 12.0 * f[2] + 6.0 * f[3] - f[4]) / h3
        out[-2] = (3.0 * f[-1] - 10.0 * f[-2] + 12.0 * f[-3] - 6.0 * f[-4] + f[-5]) / h3
        out[-1] = (5.0 * f[-1] - 18.0 * f[-2] + 24.0 * f[-3] - 14.0 * f[-4] + 3.0 * f[-5]) / h3
    return out[:, 0] if squeeze else out


ARCLENGTH_RTOL = 1e-4
UNIT_TANGENT_ATOL = 1e-8


@dataclass(frozen=True)
class CurveSamples:
    """A curve sampled at s0 + i*h, i = 0..m-1, in R^2 or R^3.

    positions: (m, n) array; tangents: (m, n) unit vectors (derived by finite
    differences when omitted).  Instances are immutable after construction.
    """

    positions: np.ndarray
    h: float
    s0: float = 0.0
    tangents: np.ndarray = None
    validate: bool = True

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float)
        if pos.ndim != 2 or pos.shape[1] not in (2, 3):
            raise ValueError("positions must be (m, n) with n in {2, 3}")
        if pos.shape[0] < 2:
            raise ValueError("need at least two samples")
        if not self.h > 0.0:
            raise ValueError("grid spacing h must be positive")
        tan = self.tangents
        if tan is None:
            tan = finite_difference(pos, self.h, 1)
            tan = tan / np.linalg.norm(tan, axis=1)[:, None]
        else:
            tan = np.array(tan, dtype=float)
            if tan.shape != pos.shape:
                raise ValueError("tangents must match the shape of positions")
        if self.validate:
            seg = np.linalg.norm(np.diff(pos, axis=0), axis=1)
            worst = np.max(np.abs(seg - self.h)) / self.h
            if worst > ARCLENGTH_RTOL:
                raise ValueError(
                    f"samples are not arc-length spaced: |d gamma| deviates from h "
                    f"by relative {worst:.3g} (tolerance {ARCLENGTH_RTOL:g})"
                )
            tnorm = np.linalg.norm(tan, axis=1)
            if np.max(np.abs(tnorm - 1.0)) > UNIT_TANGENT_ATOL:
                raise ValueError("tangents are not unit vectors")
        pos.flags.writeable = False
        tan.flags.writeable = False
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "tangents", tan)

    @property
    def n(self):
        return self.positions.shape[1]

    @property
    def num_samples(self):
        return self.positions.shape[0]

    @property
    def length(self):
        return (self.num_samples - 1) * self.h

    def grid(self):
        return self.s0 + self.h * np.arange(self.num_samples)

    def derive(self, order):
        """Finite-difference derivative of the positions w.r.t. arc length."""
        return finite_difference(self.positions, self.h, order)

    def tangent_derivative(self, order=1):
        return finite_difference(self.tangents, self.h, order)


@dataclass(frozen=True)
class FrameField:
    """Parallel normal frame and curvature along a curve.

    normals: (m, n, n-1), column j is the j-th parallel normal field.
    curvature: (m, n-1) components of -T' in the frame (T' = -N kappa).
    """

    normals: np.ndarray
    curvature: np.ndarray


@dataclass(frozen=True)
class HolonomyFrame:
    """Reference unit normals at the two endpoints of a space curve."""

    w_a: np.ndarray
    w_b: np.ndarray


def default_seed_normal(t0):
    """Coordinate axis least aligned with t0, orthonormalized against it.

    Deterministic and never degenerate; ties break to the lowest axis index.
    """
    t0 = np.asarray(t0, dtype=float)
    axis = np.zeros_like(t0)
    axis[int(np.argmin(np.abs(t0)))] = 1.0
    seed = axis - np.dot(axis, t0) * t0
    return seed / np.linalg.norm(seed)


def transport_normal(curve, z0):
    """Discrete parallel transport of a unit normal along the whole curve.

    Per step the normal is advanced with the parallel-field equation (Z' is
    purely tangential): the increment -<Z, dT> is applied along the midpoint
    tangent, which makes the in-plane phase second-order accurate; the result
    is then reprojected onto the next tangent's normal space and renormalized,
    which preserves unit length and orthogonality exactly.  Returns an (m, n)
    array of transported normals.
    """
    tang = curve.tangents
    z = np.array(z0, dtype=float)
    z -= np.dot(z, tang[0]) * tang[0]
    norm = np.linalg.norm(z)
    if norm < 1e-8:
        raise ValueError("seed normal is parallel to the initial tangent")
    z /= norm
    out = np.empty_like(tang)
    out[0] = z
    for i in range(curve.num_samples - 1):
        t_next = tang[i + 1]
        t_mid = tang[i] + t_next
        t_mid = t_mid / np.linalg.norm(t_mid)
        z = z - np.dot(z, t_next - tang[i]) * t_mid
        z = z - np.dot(z, t_next) * t_next
        z = z / np.linalg.norm(z)
        out[i + 1] = z
    return out


def parallel_frame(curve, seed_normal=None):
    """Parallel normal frame with det(T, N1, ..., N_{n-1}) fixed by convention.

    For plane curves the single normal is N = -J T (J = +90 degree rotation),
    so the signed curvature of a counter-clockwise circle is positive.  For
    space curves N1 is transported from the seed and N2 = T x N1, which makes
    the frame right-handed: det(T, N1, N2) = +1.
    """
    tang = curve.tangents
    tder = curve.tangent_derivative()
    if curve.n == 2:
        normals = np.stack((tang[:, 1], -tang[:, 0]), axis=1)[:, :, None]
        kappa = -_dot(tder, normals[:, :, 0])[:, None]
        return FrameField(normals, kappa)
    if seed_normal is None:
        seed_normal = default_seed_normal(tang[0])
    n1 = transport_normal(curve, seed_normal)
    n2 = np.cross(tang, n1)
    normals = np.stack((n1, n2), axis=2)
    kappa = np.stack((-_dot(tder, n1), -_dot(tder, n2)), axis=1)
    return FrameField(normals, kappa)


def holonomy(curve, frame):
    """Angle (mod 2*pi, in (-pi, pi]) by which parallel transport of w_a
    arrives rotated relative to w_b, measured in the basis {w_b, T(b) x w_b}.
    """
    if curve.n != 3:
        raise ValueError("holonomy is defined for space curves (n = 3)")
    w_a = np.asarray(frame.w_a, dtype=float)
    w_b = np.asarray(frame.w_b, dtype=float)
    t_a, t_b = curve.tangents[0], curve.tangents[-1]
    for w, t, name in ((w_a, t_a, "w_a"), (w_b, t_b, "w_b")):
        if abs(np.linalg.norm(w) - 1.0) > 1e-8 or abs(np.dot(w, t)) > 1e-8:
            raise ValueError(f"invalid holonomy frame: {name} must be a unit normal")
    z_b = transport_normal(curve, w_a)[-1]
    return math.atan2(np.dot(z_b, np.cross(t_b, w_b)), np.dot(z_b, w_b))


def bending_energy(curve, profile):
    """Trapezoid quadrature of (1/2) rho |dT/ds|^2 over the grid."""
    rho = profile.values(curve.grid())[0]
    tder = curve.tangent_derivative()
    return float(np.trapezoid(0.5 * rho * _dot(tder, tder), dx=curve.h))


def curve_length_variation(curve, variation):
    """First variation of length along `variation` (same grid as the curve):
    boundary term <variation, T>|_a^b minus the quadrature of <variation, dT/ds>.
    """
    var = np.asarray(variation, dtype=float)
    if var.shape != curve.positions.shape:
        raise ValueError("variation must be sampled on the curve's grid")
    tang = curve.tangents
    tder = curve.tangent_derivative()
    boundary = np.dot(var[-1], tang[-1]) - np.dot(var[0], tang[0])
    return float(boundary - np.trapezoid(_dot(var, tder), dx=curve.h))


def holonomy_gradient(curve):
    """Variational gradient field of the holonomy: T x T'' on the grid.

    Pairing it with a compactly supported variation (trapezoid quadrature)
    gives the first variation of the holonomy for fixed endpoint frames.
    """
    if curve.n != 3:
        raise ValueError("holonomy gradient is defined for space curves (n = 3)")
    t2 = curve.tangent_derivative(2)
    return np.cross(curve.tangents, t2)
