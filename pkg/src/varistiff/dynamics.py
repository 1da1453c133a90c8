"""Dynamical-systems connections: variable-length pendulums and the asymptotic
velocity of thin vortex filaments with variable thickness.

Only the thin-filament limit of the filament law is evaluated here: the full
cut-off Biot-Savart velocity of a finite-thickness filament is out of scope
(its contribution is of the order of the thinness parameter epsilon and the
thickness evolution breaks the rigid-motion picture over time anyway).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .integrators import PlanarThetaSystem, VariablePendulumSystem, integrate
from .stiffness import ScaledProfile, SquaredProfile


def _dot(u, v):
    return np.einsum("ij,ij->i", u, v)


@dataclass(frozen=True)
class VortexConfig:
    """Thin vortex filament with thickness a(s) = a1 ** rho(s).

    profile plays the exponent (and equals the bending stiffness of the
    elastic-curve picture); c2 scales the tangential thickness-gradient
    velocity.  a0 is the cut-off reference thickness and a1 the thinness
    scale, 0 < a1 << a0 << 1; they only document the asymptotic regime, the
    velocity itself needs just (profile, c2).
    """

    profile: object
    c2: float = 0.0
    a0: float = None
    a1: float = None

    @property
    def epsilon(self):
        """log(a0)/log(a1); the dropped terms are of this order."""
        if self.a0 is None or self.a1 is None:
            return None
        return math.log(self.a0) / math.log(self.a1)


def vortex_velocity(curve, config):
    """Asymptotic filament velocity -rho T x dT/ds - c2 rho' T per sample."""
    if curve.n != 3:
        raise ValueError("filament velocity is defined for space curves (n = 3)")
    rho, drho, _ = config.profile.values(curve.grid())
    tder = curve.tangent_derivative(1)
    return -rho[:, None] * np.cross(curve.tangents, tder) - (config.c2 * drho)[:, None] * curve.tangents


@dataclass(frozen=True)
class KillingFit:
    """Best rigid-motion generators (omega, v) explaining a velocity field.

    The fitted field is x -> omega x x + v; only components normal to the
    curve are matched (tangential velocity is reparameterization).
    """

    omega: np.ndarray
    v: np.ndarray
    residual_rms: float
    rank_deficient: bool


def killing_fit(curve, velocity):
    """Least-squares fit of an infinitesimal Euclidean motion to a velocity field.

    Minimizes sum_i |P_i (velocity_i - omega x gamma_i - v)|^2 where P_i
    projects out the tangent direction.  Rank-deficient normal systems (e.g.
    straight filaments, or curves with a rigid self-symmetry) are flagged and
    resolved by the minimum-norm solution.
    """
    if curve.n != 3:
        raise ValueError("rigid-motion fitting is defined for space curves (n = 3)")
    vel = np.asarray(velocity, dtype=float)
    if vel.shape != curve.positions.shape:
        raise ValueError("velocity must be sampled on the curve's grid")
    pos = curve.positions
    t = curve.tangents
    m = pos.shape[0]
    # rows: P (-[gamma]_x | I) (omega; v) = P velocity
    gx, gy, gz = pos[:, 0], pos[:, 1], pos[:, 2]
    zero = np.zeros(m)
    minus_cross = np.stack(
        (
            np.stack((zero, gz, -gy), axis=1),
            np.stack((-gz, zero, gx), axis=1),
            np.stack((gy, -gx, zero), axis=1),
        ),
        axis=1,
    )
    blocks = np.concatenate((minus_cross, np.broadcast_to(np.eye(3), (m, 3, 3))), axis=2)
    proj = np.eye(3)[None, :, :] - t[:, :, None] * t[:, None, :]
    design = (proj @ blocks).reshape(3 * m, 6)
    rhs = (proj @ vel[:, :, None])[:, :, 0].reshape(-1)
    solution, _, rank, _ = np.linalg.lstsq(design, rhs, rcond=None)
    residual = (design @ solution - rhs).reshape(m, 3)
    rms = float(np.sqrt(np.mean(np.sum(residual**2, axis=1))))
    return KillingFit(
        omega=solution[:3], v=solution[3:], residual_rms=rms, rank_deficient=rank < 6
    )


def pendulum_equivalence_check(g, length_profile, theta0, omega0, length, steps, s0=0.0):
    """Max |theta| deviation between the variable-rod pendulum (g, l(s)) and
    the stiffness pendulum with rho = l^2, q = g l, integrated side by side
    from the same initial conditions.  The change of variables is exact, so
    the deviation measures only integrator error.
    """
    init = (theta0, omega0)
    rod = integrate(VariablePendulumSystem(g, length_profile), init, s0, length, steps)
    stiff = integrate(
        PlanarThetaSystem(ScaledProfile(g, length_profile), SquaredProfile(length_profile)),
        init,
        s0,
        length,
        steps,
    )
    return float(np.max(np.abs(rod.theta() - stiff.theta())))
