"""Independent brute-force functionals used as finite-difference oracles.

These evaluate length, bending energy and holonomy of a curve sampled in an
arbitrary parameterization (np.gradient derivatives, trapezoid quadrature,
projection-only transport), deliberately sharing no code with the library's
evaluators: central differences of these functionals under a variation are
the reference values the library's variational fields are tested against.
"""
from __future__ import annotations

import math

import numpy as np


def general_length(positions, du):
    speed = np.linalg.norm(np.gradient(positions, du, axis=0), axis=1)
    return float(np.trapezoid(speed, dx=du))


def general_bending_energy(positions, rho_of_u, du):
    """(1/2) integral of rho |dT/ds|^2 ds for a curve gamma(u); rho is attached
    to the parameter u (material description), not to the moving arc length."""
    vel = np.gradient(positions, du, axis=0)
    speed = np.linalg.norm(vel, axis=1)
    tang = vel / speed[:, None]
    dtds = np.gradient(tang, du, axis=0) / speed[:, None]
    density = np.einsum("ij,ij->i", dtds, dtds)
    return float(0.5 * np.trapezoid(rho_of_u * density * speed, dx=du))


def general_holonomy(positions, du, w_a, w_b):
    """Holonomy via rotation-based discrete transport of w_a to the far end.

    Each step rotates the normal by the Rodrigues rotation taking T_i to
    T_{i+1} about their common perpendicular, a second-order scheme that is
    independent of the library's predictor-projection transport.
    """
    vel = np.gradient(positions, du, axis=0)
    tang = vel / np.linalg.norm(vel, axis=1)[:, None]
    z = np.asarray(w_a, dtype=float)
    z = z - np.dot(z, tang[0]) * tang[0]
    z = z / np.linalg.norm(z)
    for i in range(1, tang.shape[0]):
        t_prev, t_next = tang[i - 1], tang[i]
        axis = np.cross(t_prev, t_next)
        sin_angle = np.linalg.norm(axis)
        if sin_angle < 1e-14:
            continue
        axis = axis / sin_angle
        cos_angle = float(np.clip(np.dot(t_prev, t_next), -1.0, 1.0))
        z = (
            z * cos_angle
            + np.cross(axis, z) * sin_angle
            + axis * np.dot(axis, z) * (1.0 - cos_angle)
        )
        z = z / np.linalg.norm(z)
    t_b = tang[-1]
    return math.atan2(np.dot(z, np.cross(t_b, w_b)), np.dot(z, w_b))


def wrap_angle(angle):
    """Map an angle difference to (-pi, pi]."""
    return (angle + math.pi) % (2.0 * math.pi) - math.pi


def central_difference(func, eps):
    """Central difference of a scalar function of one parameter at 0."""
    return (func(eps) - func(-eps)) / (2.0 * eps)
