"""Residuals and recovered constants for elastic curves with variable stiffness.

Every characterization of an elastic or holonomy constrained elastic curve is
evaluated with discrete derivatives and reported as RMS over the interior
samples (endpoint stencils are noisier) plus the max over all samples.
Tolerances for these residuals should scale like max(atol, C h^2), reflecting
second-order finite-difference truncation; `fd_tolerance` encodes that rule.

Sign conventions for the constant vector `a` differ between the two first
integrals in use and both appear below, each documented on its operation:

  * tangent form (pendulum convention):
        rho T'' + rho' T' - rho <T'', T> T = a - <a, T> T,
    with pointwise multiplier  Lambda = rho <T', T'> / 2 - <a, T>.
  * spatial first integral (moment convention), shared by the chain
        rho T'' + (3/2) rho <T',T'> T + rho' T' - Lambda T - mu T x T' + a = 0
        rho (gamma' x gamma'') = -mu T + a x gamma + b
        rho gamma'' = (a x gamma + b) x gamma',
    with  Lambda = rho <T', T'> / 2 + <a, T>  and  mu = <a x gamma + b, T>.

The `a` of one convention is the negative of the other.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curves import finite_difference, parallel_frame

INTERIOR_MARGIN = 2


def fd_tolerance(h, atol=1e-8, scale=10.0):
    """Residual tolerance for grid spacing h: max(atol, scale * h^2)."""
    return max(atol, scale * h * h)


def _dot(u, v):
    return np.einsum("ij,ij->i", u, v)


@dataclass(frozen=True)
class ResidualReport:
    """RMS (interior samples) and max (all samples) of a per-sample residual."""

    name: str
    rms: float
    max: float
    per_sample: np.ndarray = None

    def to_dict(self):
        return {"name": self.name, "rms": self.rms, "max": self.max}


def make_report(name, residual, keep_samples=True):
    """Build a report from per-sample residual vectors (m, k) or scalars (m,)."""
    residual = np.asarray(residual, dtype=float)
    norms = np.abs(residual) if residual.ndim == 1 else np.linalg.norm(residual, axis=1)
    interior = norms[INTERIOR_MARGIN:-INTERIOR_MARGIN] if norms.size > 2 * INTERIOR_MARGIN else norms
    rms = float(np.sqrt(np.mean(interior**2)))
    return ResidualReport(name, rms, float(np.max(norms)), norms if keep_samples else None)


@dataclass(frozen=True)
class Multipliers:
    """Recovered Lagrange data of a (candidate) elastic curve."""

    lam: np.ndarray = None
    mu: float = None
    a: np.ndarray = None
    b: np.ndarray = None
    c: float = None


def bending_gradient_field(curve, profile):
    """Interior variational gradient of the bending energy, per sample.

    rho T''' + 3 rho <T'', T'> T + (3/2) rho <T', T'> T'
        + rho'' T' + rho' (2 T'' + (3/2) <T', T'> T)

    Pairing this field with a compactly supported variation (trapezoid
    quadrature) gives the first variation of the bending energy.
    """
    if curve.num_samples < 7:
        raise ValueError("need at least 7 samples for third derivatives")
    t = curve.tangents
    t1 = curve.tangent_derivative(1)
    t2 = curve.tangent_derivative(2)
    t3 = curve.tangent_derivative(3)
    rho, d1, d2 = profile.values(curve.grid())
    t1t1 = _dot(t1, t1)
    return (
        rho[:, None] * t3
        + (3.0 * rho * _dot(t2, t1))[:, None] * t
        + (1.5 * rho * t1t1)[:, None] * t1
        + d2[:, None] * t1
        + d1[:, None] * (2.0 * t2 + 1.5 * t1t1[:, None] * t)
    )


def elastic_residual(curve, profile, a):
    """Residual of the tangent form (pendulum convention, see module docstring)."""
    a = np.asarray(a, dtype=float)
    t = curve.tangents
    t1 = curve.tangent_derivative(1)
    t2 = curve.tangent_derivative(2)
    rho, d1, _ = profile.values(curve.grid())
    residual = (
        rho[:, None] * t2
        + d1[:, None] * t1
        - (rho * _dot(t2, t))[:, None] * t
        - a[None, :]
        + (t @ a)[:, None] * t
    )
    return make_report("elastic_tangent", residual)


def arclength_multiplier(curve, profile, a):
    """Pointwise multiplier of the arc-length constraint,
    Lambda = rho <T', T'> / 2 - <a, T>  (pendulum convention for a).
    """
    a = np.asarray(a, dtype=float)
    t1 = curve.tangent_derivative(1)
    rho = profile.values(curve.grid())[0]
    return 0.5 * rho * _dot(t1, t1) - curve.tangents @ a


def holonomy_multiplier(curve, a, b):
    """Mean and max deviation of <a x gamma + b, T> over the samples.

    The quantity is constant on exact solutions of the moment-convention
    equations; the spread measures how far the sampled curve is from one.
    """
    if curve.n != 3:
        raise ValueError("holonomy multiplier is defined for space curves (n = 3)")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    field = np.cross(a[None, :], curve.positions) + b[None, :]
    values = _dot(field, curve.tangents)
    mu = float(np.mean(values))
    return mu, float(np.max(np.abs(values - mu)))


def characterization_fields(curve, profile, a, b, mu=None):
    """Per-sample residual vector fields of the four equivalent first-integral
    characterizations (moment convention for a, b; see module docstring), as a
    dict keyed by first_integral, first_integral_normal, moment_balance and
    cross_product_form.

    The multiplier Lambda of the first integral is recovered pointwise; mu
    defaults to the sampled mean of <a x gamma + b, T>.  The normal-projection
    field is computed as (I - T T^t) applied to the first-integral field, which
    agrees with its displayed form up to the discretization-level tangential
    part of the discrete T'.
    """
    if curve.n != 3:
        raise ValueError("these characterizations are defined for space curves (n = 3)")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if mu is None:
        mu = holonomy_multiplier(curve, a, b)[0]
    pos = curve.positions
    t = curve.tangents
    t1 = curve.tangent_derivative(1)
    t2 = curve.tangent_derivative(2)
    g1 = curve.derive(1)
    g2 = curve.derive(2)
    rho, d1, _ = profile.values(curve.grid())

    lam = 0.5 * rho * _dot(t1, t1) + t @ a
    r2 = (
        rho[:, None] * t2
        + (1.5 * rho * _dot(t1, t1))[:, None] * t
        + d1[:, None] * t1
        - lam[:, None] * t
        - mu * np.cross(t, t1)
        + a[None, :]
    )
    r3 = r2 - _dot(r2, t)[:, None] * t
    moment = np.cross(a[None, :], pos) + b[None, :]
    r4 = rho[:, None] * np.cross(g1, g2) + mu * t - moment
    r5 = rho[:, None] * g2 - np.cross(moment, g1)
    return {
        "first_integral": r2,
        "first_integral_normal": r3,
        "moment_balance": r4,
        "cross_product_form": r5,
    }


def characterization_residuals(curve, profile, a, b, mu=None):
    """Residual reports (RMS/max) of the four equivalent characterizations;
    see characterization_fields for the fields and conventions."""
    fields = characterization_fields(curve, profile, a, b, mu)
    return [make_report(name, field) for name, field in fields.items()]


def curvature_system_residual(curve, profile, frame, mode, mu=0.0, a=None):
    """Residuals of the curvature-function system in the parallel frame.

    mode "free":      (rho kappa)'' + (1/2) rho <kappa,kappa> kappa = 0
                      and (1/2) rho' <kappa,kappa> = 0,
    mode "elastic":   adds -Lambda kappa to the first equation and the scalar
                      equation becomes Lambda' + (1/2) rho' <kappa,kappa> = 0;
                      `a` follows the pendulum convention,
    mode "holonomy":  additionally adds -mu J kappa' (J = +90 degree rotation
                      of the normal coordinates, n = 3 only); `a` follows the
                      moment convention.  The sign of the mu term is pinned by
                      mu = <a x gamma + b, T> of the moment balance together
                      with the right-handed frame (T x N1 = N2): the term
                      -mu T x T'' of the Euler-Lagrange equation then reads
                      +mu N(J kappa'), i.e. -mu J kappa' on this side.

    Returns (vector equation report, scalar equation report).
    """
    if mode not in ("free", "elastic", "holonomy"):
        raise ValueError(f"unknown mode {mode!r}")
    kappa = frame.curvature
    if kappa.shape[0] != curve.num_samples:
        raise ValueError("frame was not computed on the curve's grid")
    rho, d1, _ = profile.values(curve.grid())
    k2 = np.einsum("ij,ij->i", kappa, kappa)
    vec = finite_difference(rho[:, None] * kappa, curve.h, 2) + 0.5 * (rho * k2)[:, None] * kappa
    if mode == "holonomy":
        if curve.n != 3:
            raise ValueError("holonomy mode needs a space curve (n = 3)")
        k1 = finite_difference(kappa, curve.h, 1)
        vec = vec - mu * np.stack((-k1[:, 1], k1[:, 0]), axis=1)
    if mode == "free":
        scalar = 0.5 * d1 * k2
    else:
        a_vec = np.zeros(curve.n) if a is None else np.asarray(a, dtype=float)
        sign = -1.0 if mode == "elastic" else 1.0
        lam = 0.5 * rho * k2 + sign * (curve.tangents @ a_vec)
        vec = vec - lam[:, None] * kappa
        scalar = finite_difference(lam, curve.h, 1) + 0.5 * d1 * k2
    return make_report(f"curvature_{mode}", vec), make_report(f"multiplier_{mode}", scalar)


@dataclass(frozen=True)
class LineFit:
    """Least-squares fit of rho*kappa = -<J a, gamma> + c for a plane curve."""

    a: np.ndarray
    c: float
    report: ResidualReport
    rank_deficient: bool


def inflection_line_fit(curve, profile, a=None, c=None):
    """Check (or fit) the planar identity rho*kappa + <J a, gamma> - c = 0.

    The zeros of rho*kappa (inflection points) of a planar elastic curve lie
    on the straight line <J a, gamma> = c.  When a, c are not supplied they
    are fitted by least squares over all samples; a rank-deficient fit (e.g.
    a straight segment) is flagged and resolved by the minimum-norm solution.
    """
    if curve.n != 2:
        raise ValueError("the inflection-line identity applies to plane curves")
    kappa = parallel_frame(curve).curvature[:, 0]
    rho = profile.values(curve.grid())[0]
    rk = rho * kappa
    x, y = curve.positions[:, 0], curve.positions[:, 1]
    if a is None or c is None:
        design = np.stack((-y, x, np.ones_like(x)), axis=1)
        solution, _, rank, _ = np.linalg.lstsq(design, rk, rcond=None)
        a = np.array(solution[:2])
        c = float(solution[2])
        rank_deficient = rank < 3
    else:
        a = np.asarray(a, dtype=float)
        c = float(c)
        rank_deficient = False
    # <J a, gamma> with J = +90 degrees: J a = (-a2, a1)
    residual = rk + (-a[1] * x + a[0] * y) - c
    return LineFit(a, c, make_report("inflection_line", residual), rank_deficient)


def moment_alignment_check(curve, profile, mu, a, b, curvature_floor=1e-8):
    """Pointwise value of rho <gamma' x gamma'', -mu gamma' + a x gamma + b>
    and whether it is strictly positive wherever the curve actually bends
    (samples with |gamma''| <= curvature_floor are skipped; all-straight
    curves pass vacuously).  Positivity is necessary for the curve to be
    holonomy constrained elastic with the given constants.
    """
    if curve.n != 3:
        raise ValueError("the alignment check is defined for space curves (n = 3)")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    g1 = curve.derive(1)
    g2 = curve.derive(2)
    rho = profile.values(curve.grid())[0]
    field = -mu * g1 + np.cross(a[None, :], curve.positions) + b[None, :]
    values = rho * _dot(np.cross(g1, g2), field)
    bent = np.linalg.norm(g2, axis=1) > curvature_floor
    positive = bool(np.all(values[bent] > 0.0)) if np.any(bent) else True
    return values, positive


def energy_from_multipliers(curve, lam, a):
    """Bending energy of an elastic curve from its multipliers:
    quadrature of Lambda plus <a, gamma(b) - gamma(a)> (pendulum convention).
    """
    a = np.asarray(a, dtype=float)
    endpoint = float(np.dot(a, curve.positions[-1] - curve.positions[0]))
    return float(np.trapezoid(np.asarray(lam, dtype=float), dx=curve.h)) + endpoint


def fit_multipliers(curve, profile):
    """Least-squares recovery of (mu, a, b) from the moment balance
    rho (gamma' x gamma'') = -mu T + a x gamma + b, plus the pointwise
    multiplier Lambda it implies.  Rank-deficient systems resolve to the
    minimum-norm solution.
    """
    if curve.n != 3:
        raise ValueError("multiplier fitting is defined for space curves (n = 3)")
    pos = curve.positions
    t = curve.tangents
    g1 = curve.derive(1)
    g2 = curve.derive(2)
    rho = profile.values(curve.grid())[0]
    m = curve.num_samples
    design = np.zeros((3 * m, 7))
    design[:, 0] = -t.reshape(-1)
    # a x gamma as a matrix acting on a: -[gamma]_x
    gx, gy, gz = pos[:, 0], pos[:, 1], pos[:, 2]
    zero = np.zeros(m)
    cross_blocks = np.stack(
        (
            np.stack((zero, gz, -gy), axis=1),
            np.stack((-gz, zero, gx), axis=1),
            np.stack((gy, -gx, zero), axis=1),
        ),
        axis=1,
    )
    design[:, 1:4] = cross_blocks.reshape(3 * m, 3)
    design[:, 4:7] = np.tile(np.eye(3), (m, 1))
    rhs = (rho[:, None] * np.cross(g1, g2)).reshape(-1)
    solution, _, _, _ = np.linalg.lstsq(design, rhs, rcond=None)
    mu = float(solution[0])
    a = solution[1:4]
    b = solution[4:7]
    t1 = curve.tangent_derivative(1)
    lam = 0.5 * rho * _dot(t1, t1) + t @ a
    return Multipliers(lam=lam, mu=mu, a=a, b=b)
