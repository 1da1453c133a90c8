"""Fixed-step RK4 integration of the curve and pendulum equation families.

Systems expose a right-hand side over plain float tuples, which keeps the
per-step cost low for the shooting optimizer (thousands of short
integrations).  Fixed steps, no adaptivity: closure residuals must remain
smooth functions of the parameters.

State layouts:
    cond5:             (gamma[3], T[3])      T' = ((a x gamma + b) x T) / rho
    pendulum_form:     (gamma[n], T[n], U[n])  with U = T'; the tangential
                       part of T'' is closed via <T'', T> = -<T', T'>
    planar_theta:      (theta, theta')       theta'' = -(q/rho) sin(theta) - (rho'/rho) theta'
    variable_pendulum: (theta, theta')       theta'' = -(g/l) sin(theta) - 2 (l'/l) theta'
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .curves import CurveSamples


class IntegrationError(RuntimeError):
    """Numerical failure during integration; carries the arc length reached."""

    def __init__(self, message, s=None):
        super().__init__(message)
        self.s = s


class Cond5System:
    """First-order characterization of holonomy constrained elastic curves:
    rho * gamma'' = (a x gamma + b) x gamma'.  The right-hand side of T is a
    cross product with T, hence exactly orthogonal to T.
    """

    dim = 6
    is_curve = True
    n = 3

    def __init__(self, a, b, profile):
        self.a = np.asarray(a, dtype=float)
        self.b = np.asarray(b, dtype=float)
        self.profile = profile
        self._ax, self._ay, self._az = (float(v) for v in self.a)
        self._bx, self._by, self._bz = (float(v) for v in self.b)
        self._rho = profile.evaluate

    def rhs(self, s, y):
        gx, gy, gz, tx, ty, tz = y
        mx = self._ay * gz - self._az * gy + self._bx
        my = self._az * gx - self._ax * gz + self._by
        mz = self._ax * gy - self._ay * gx + self._bz
        rho = self._rho(s)[0]
        return (
            tx,
            ty,
            tz,
            (my * tz - mz * ty) / rho,
            (mz * tx - mx * tz) / rho,
            (mx * ty - my * tx) / rho,
        )

    def conserved_quantity(self, y):
        """<a x gamma + b, T>, constant along exact trajectories."""
        gx, gy, gz, tx, ty, tz = y
        mx = self._ay * gz - self._az * gy + self._bx
        my = self._az * gx - self._ax * gz + self._by
        mz = self._ax * gy - self._ay * gx + self._bz
        return mx * tx + my * ty + mz * tz


class PendulumFormSystem:
    """Second-order tangent equation of elastic curves,
    rho T'' + rho' T' - rho <T'', T> T = a - <a, T> T,
    integrated with state (gamma, T, T') in R^n, n = 2 or 3.
    """

    is_curve = True

    def __init__(self, a, profile):
        self.a = np.asarray(a, dtype=float)
        if self.a.shape not in ((2,), (3,)):
            raise ValueError("a must be a 2- or 3-vector")
        self.n = self.a.shape[0]
        self.dim = 3 * self.n
        self.profile = profile
        self._rho = profile.evaluate

    def rhs(self, s, y):
        n = self.n
        t = y[n : 2 * n]
        u = y[2 * n :]
        rho, drho, _ = self._rho(s)
        a = self.a
        at = sum(a[i] * t[i] for i in range(n))
        uu = sum(u[i] * u[i] for i in range(n))
        upr = tuple((a[i] - at * t[i] - drho * u[i]) / rho - uu * t[i] for i in range(n))
        return tuple(y[n:]) + upr


class PlanarThetaSystem:
    """Tangent-angle pendulum of planar elastic curves.  q may be a constant
    or a profile-like evaluable (needed when q tracks a varying rod length).
    """

    dim = 2
    is_curve = False

    def __init__(self, q, profile):
        self.q = q
        self.profile = profile
        self._rho = profile.evaluate
        self._q = q.evaluate if hasattr(q, "evaluate") else None

    def rhs(self, s, y):
        theta, omega = y
        rho, drho, _ = self._rho(s)
        q = self._q(s)[0] if self._q is not None else self.q
        return (omega, -(q / rho) * math.sin(theta) - (drho / rho) * omega)


class VariablePendulumSystem:
    """Pendulum with arc-length dependent rod length l(s) and gravity g."""

    dim = 2
    is_curve = False

    def __init__(self, g, length_profile):
        self.g = g
        self.length_profile = length_profile
        self._ell = length_profile.evaluate

    def rhs(self, s, y):
        theta, omega = y
        ell, dell, _ = self._ell(s)
        return (omega, -(self.g / ell) * math.sin(theta) - 2.0 * (dell / ell) * omega)


def rk4_step(system, state, s, h):
    """One classical Runge-Kutta step; raises on a non-finite result."""
    y = tuple(float(v) for v in np.asarray(state, dtype=float))
    out = _step(system.rhs, y, s, h)
    if not all(math.isfinite(v) for v in out):
        raise IntegrationError(f"state became non-finite at s={s + h:.6g}", s=s + h)
    return np.array(out)


def _step(rhs, y, s, h):
    half = 0.5 * h
    k1 = rhs(s, y)
    k2 = rhs(s + half, tuple(yi + half * ki for yi, ki in zip(y, k1)))
    k3 = rhs(s + half, tuple(yi + half * ki for yi, ki in zip(y, k2)))
    k4 = rhs(s + h, tuple(yi + h * ki for yi, ki in zip(y, k3)))
    sixth = h / 6.0
    return tuple(
        yi + sixth * (a + 2.0 * (b + c) + d) for yi, a, b, c, d in zip(y, k1, k2, k3, k4)
    )


TANGENT_DRIFT_ABORT = 1e-3


@dataclass(frozen=True)
class Trajectory:
    """Recorded states of a fixed-step integration over [s0, s0 + length]."""

    system: object
    s0: float
    h: float
    states: np.ndarray
    tangent_drift: float

    def grid(self):
        return self.s0 + self.h * np.arange(self.states.shape[0])

    def curve(self, validate=True):
        """CurveSamples from the (gamma, T) blocks of a curve-kind trajectory."""
        if not getattr(self.system, "is_curve", False):
            raise ValueError("trajectory does not carry a curve state")
        n = self.system.n
        return CurveSamples(
            self.states[:, :n],
            self.h,
            s0=self.s0,
            tangents=self.states[:, n : 2 * n],
            validate=validate,
        )

    def theta(self):
        if getattr(self.system, "is_curve", False):
            raise ValueError("trajectory does not carry a pendulum state")
        return self.states[:, 0]


def integrate(system, init, s0, length, steps, renormalize=False):
    """Integrate `system` from `init` over [s0, s0 + length] with `steps` RK4 steps.

    Curve-kind systems must start with a unit tangent (checked to 1e-10); the
    tangent norm is not renormalized by default, its drift is monitored and
    the run aborts if it exceeds 1e-3.  Set renormalize=True for very long
    runs where the drift itself is not under study.
    """
    if steps < 2:
        raise ValueError("steps must be at least 2")
    if not length > 0.0:
        raise ValueError("integration length must be positive")
    y = tuple(float(v) for v in np.asarray(init, dtype=float))
    if len(y) != system.dim:
        raise ValueError(f"state size {len(y)} does not match system dimension {system.dim}")
    is_curve = getattr(system, "is_curve", False)
    n = system.n if is_curve else 0
    if is_curve:
        tnorm = math.sqrt(sum(v * v for v in y[n : 2 * n]))
        if abs(tnorm - 1.0) > 1e-10:
            raise ValueError(f"initial tangent must be unit length, |T| = {tnorm:.12g}")
    h = length / steps
    rhs = system.rhs
    states = np.empty((steps + 1, system.dim))
    states[0] = y
    drift = 0.0
    s = s0
    for i in range(steps):
        y = _step(rhs, y, s, h)
        s = s0 + (i + 1) * h
        if not all(math.isfinite(v) for v in y):
            raise IntegrationError(f"state became non-finite at s={s:.6g}", s=s)
        if is_curve:
            t2 = sum(v * v for v in y[n : 2 * n])
            dev = abs(math.sqrt(t2) - 1.0)
            if dev > drift:
                drift = dev
            if dev > TANGENT_DRIFT_ABORT:
                raise IntegrationError(
                    f"tangent norm drifted by {dev:.3g} at s={s:.6g} "
                    f"(abort threshold {TANGENT_DRIFT_ABORT:g})",
                    s=s,
                )
            if renormalize:
                inv = 1.0 / math.sqrt(t2)
                y = y[:n] + tuple(v * inv for v in y[n : 2 * n]) + y[2 * n :]
        states[i + 1] = y
    return Trajectory(system, s0, h, states, drift)


def default_steps(length):
    """Step count heuristic: at least 1000 steps and at most 1e-3 arc length per step."""
    return max(1000, int(math.ceil(length / 1e-3)))


def reconstruct_planar_curve(theta, h, origin=(0.0, 0.0)):
    """Planar curve with tangent T = (sin theta, -cos theta) from a theta trajectory.

    Positions are the cumulative Simpson quadrature of T starting at `origin`.
    """
    from scipy.integrate import cumulative_simpson

    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 1 or theta.size < 3:
        raise ValueError("need a 1-d theta trajectory with at least 3 samples")
    tang = np.stack((np.sin(theta), -np.cos(theta)), axis=1)
    pos = cumulative_simpson(tang, dx=h, axis=0, initial=0.0)
    pos += np.asarray(origin, dtype=float)
    return CurveSamples(pos, h, tangents=tang)
