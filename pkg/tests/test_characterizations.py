"""Residual evaluators, multiplier recovery, and the equivalence identities."""
from __future__ import annotations

import numpy as np
import pytest

from conftest import circle2d, circle3d, fourier_arc, fourier_loop, straight_line
from varistiff import (
    Cond5System,
    ConstantProfile,
    CurveSamples,
    SinusoidalProfile,
    arclength_multiplier,
    bending_energy,
    bending_gradient_field,
    characterization_residuals,
    curvature_system_residual,
    elastic_residual,
    energy_from_multipliers,
    fd_tolerance,
    finite_difference,
    fit_multipliers,
    holonomy_multiplier,
    inflection_line_fit,
    integrate,
    moment_alignment_check,
    parallel_frame,
)

UNIT = ConstantProfile(1.0)


@pytest.fixture(scope="module")
def cond5_case():
    """A generic holonomy constrained elastic curve with its exact constants."""
    rng = np.random.default_rng(2)
    a = rng.uniform(-1, 1, 3)
    b = rng.uniform(-1, 1, 3)
    profile = SinusoidalProfile(1.0, 1.5, 0.0)
    trajectory = integrate(Cond5System(a, b, profile), [0, 0, 0, 1, 0, 0], 0.0, 20.0, 20000)
    return trajectory.curve(), profile, a, b


class TestBendingGradient:
    def test_straight_segment_zero(self):
        field = bending_gradient_field(straight_line(100), UNIT)
        np.testing.assert_allclose(field, 0.0, atol=1e-10)

    def test_circle_normal_magnitude(self):
        # constant curvature: the field reduces to the normal part of size
        # |kappa''+ kappa^3/2| = 1/2 with no tangential component
        curve = circle3d(4000)
        field = bending_gradient_field(curve, UNIT)
        norms = np.linalg.norm(field, axis=1)
        np.testing.assert_allclose(norms[3:-3], 0.5, atol=1e-4)
        tangential = np.einsum("ij,ij->i", field, curve.tangents)
        np.testing.assert_allclose(tangential[3:-3], 0.0, atol=1e-4)

    def test_kappa_form_decomposition(self, rng):
        # normal part -N((rho kappa)'' + rho<k,k>k/2), tangential -rho'<k,k>/2 T
        curve = fourier_loop(rng, samples=6000, amplitude=0.1, cap=1.5)
        profile = SinusoidalProfile(0.4, 1.2, 0.7)
        frame = parallel_frame(curve)
        kappa = frame.curvature
        rho, d1, _ = profile.values(curve.grid())
        k2 = np.einsum("ij,ij->i", kappa, kappa)
        vec = finite_difference(rho[:, None] * kappa, curve.h, 2) + 0.5 * (rho * k2)[:, None] * kappa
        expect = -np.einsum("ijk,ik->ij", frame.normals, vec) - (0.5 * d1 * k2)[:, None] * curve.tangents
        field = bending_gradient_field(curve, profile)
        diff = np.linalg.norm((field - expect)[3:-3], axis=1)
        assert np.sqrt(np.mean(diff**2)) <= fd_tolerance(curve.h)


class TestElasticResidual:
    def test_circle_is_elastic(self):
        report = elastic_residual(circle3d(2000), UNIT, np.zeros(3))
        assert report.rms <= fd_tolerance(circle3d(2000).h)

    def test_generic_curve_is_not(self, rng):
        report = elastic_residual(fourier_loop(rng, samples=2000), UNIT, np.zeros(3))
        assert report.rms > 0.1

    def test_report_ordering(self, rng):
        report = elastic_residual(fourier_loop(rng, samples=2000), UNIT, np.zeros(3))
        assert 0.0 <= report.rms <= report.max


class TestMultipliers:
    def test_circle_multiplier(self):
        lam = arclength_multiplier(circle3d(2000), UNIT, np.zeros(3))
        np.testing.assert_allclose(lam[2:-2], 0.5, atol=1e-4)

    def test_line_multiplier(self):
        lam = arclength_multiplier(straight_line(100), UNIT, np.array([1.0, 0.0, 0.0]))
        np.testing.assert_allclose(lam, -1.0, atol=1e-10)

    def test_constant_stiffness_constant_multiplier(self):
        # integrate the tangent equation with constant rho: Lambda is constant
        from varistiff import PendulumFormSystem

        a = np.array([0.2, -0.4, 0.1])
        system = PendulumFormSystem(a, UNIT)
        init = np.concatenate((np.zeros(3), [1, 0, 0], [0.0, 0.3, -0.1]))
        curve = integrate(system, init, 0.0, 8.0, 8000).curve()
        lam = arclength_multiplier(curve, UNIT, a)
        assert np.max(np.abs(lam[2:-2] - np.mean(lam[2:-2]))) <= 1e-5

    def test_circle_moment_multiplier(self):
        mu, spread = holonomy_multiplier(circle3d(2000), np.zeros(3), np.array([0.0, 0.0, 1.0]))
        assert mu == pytest.approx(0.0, abs=1e-12)
        assert spread <= 1e-10

    def test_cond5_moment_conserved(self, cond5_case):
        curve, _, a, b = cond5_case
        _, spread = holonomy_multiplier(curve, a, b)
        assert spread <= 1e-7

    def test_fit_recovers_constants(self, cond5_case):
        curve, profile, a, b = cond5_case
        fitted = fit_multipliers(curve, profile)
        mu_expect, _ = holonomy_multiplier(curve, a, b)
        np.testing.assert_allclose(fitted.a, a, atol=1e-5)
        np.testing.assert_allclose(fitted.b, b, atol=1e-5)
        assert fitted.mu == pytest.approx(mu_expect, abs=1e-5)


class TestCharacterizationResiduals:
    def test_cond5_satisfies_all_four(self, cond5_case):
        curve, profile, a, b = cond5_case
        reports = characterization_residuals(curve, profile, a, b)
        tol = fd_tolerance(curve.h)
        for report in reports:
            assert report.rms <= tol, report.name

    def test_circle_moment_balance_exact(self):
        curve = circle3d(10001)
        reports = characterization_residuals(
            curve, UNIT, np.zeros(3), np.array([0.0, 0.0, 1.0]), mu=0.0
        )
        moment = next(r for r in reports if r.name == "moment_balance")
        assert moment.max <= 1e-6

    def test_projection_identity(self, cond5_case):
        from varistiff import characterization_fields

        curve, profile, a, b = cond5_case
        fields = characterization_fields(curve, profile, a, b)
        t = curve.tangents
        projected = fields["first_integral"] - np.einsum(
            "ij,ij->i", fields["first_integral"], t
        )[:, None] * t
        np.testing.assert_allclose(
            projected, fields["first_integral_normal"], atol=1e-12
        )

    def test_moment_balance_derivative(self, cond5_case):
        # d/ds of (rho gamma' x gamma'' - a x gamma + mu gamma') vanishes
        curve, profile, a, b = cond5_case
        mu, _ = holonomy_multiplier(curve, a, b)
        rho = profile.values(curve.grid())[0]
        g1 = curve.derive(1)
        g2 = curve.derive(2)
        field = rho[:, None] * np.cross(g1, g2) - np.cross(a[None, :], curve.positions) + mu * g1
        deriv = finite_difference(field, curve.h, 1)
        rms = np.sqrt(np.mean(np.linalg.norm(deriv[2:-2], axis=1) ** 2))
        assert rms <= fd_tolerance(curve.h)

    def test_perturbation_raises_all_residuals(self, cond5_case):
        curve, profile, a, b = cond5_case
        mu, _ = holonomy_multiplier(curve, a, b)
        base = characterization_residuals(curve, profile, a, b, mu)
        grid = curve.grid()
        noise = 1e-3 * np.stack(
            (np.sin(7.3 * grid), np.cos(9.1 * grid), np.sin(11.7 * grid + 1.0)), axis=1
        )
        perturbed_curve = CurveSamples(curve.positions + noise, curve.h, validate=False)
        perturbed = characterization_residuals(perturbed_curve, profile, a, b, mu)
        for before, after in zip(base, perturbed):
            assert after.rms >= 10.0 * before.rms, before.name


class TestCurvatureSystem:
    def test_straight_line_free_mode(self):
        curve = straight_line(100)
        frame = parallel_frame(curve)
        vec, scal = curvature_system_residual(curve, SinusoidalProfile(0.5, 1.5), frame, "free")
        assert vec.max <= 1e-10
        assert scal.max <= 1e-10

    def test_circle_elastic_mode(self):
        curve = circle3d(4000)
        frame = parallel_frame(curve)
        vec, scal = curvature_system_residual(curve, UNIT, frame, "elastic", a=np.zeros(3))
        assert vec.rms <= fd_tolerance(curve.h)
        assert scal.rms <= fd_tolerance(curve.h)

    def test_free_mode_dichotomy(self):
        # a bent curve with varying stiffness violates the free system: the
        # scalar equation equals rho' <kappa,kappa> / 2, bounded away from zero
        curve = circle3d(4000)
        frame = parallel_frame(curve)
        _, scal = curvature_system_residual(curve, SinusoidalProfile(1.0, 1.5), frame, "free")
        assert scal.max >= 0.4

    def test_holonomy_mode_on_cond5(self, cond5_case):
        curve, profile, a, b = cond5_case
        mu, _ = holonomy_multiplier(curve, a, b)
        frame = parallel_frame(curve)
        vec, scal = curvature_system_residual(curve, profile, frame, "holonomy", mu=mu, a=a)
        assert vec.rms <= fd_tolerance(curve.h)
        assert scal.rms <= fd_tolerance(curve.h)

    def test_unknown_mode(self):
        curve = straight_line(30)
        with pytest.raises(ValueError, match="mode"):
            curvature_system_residual(curve, UNIT, parallel_frame(curve), "other")


class TestInflectionLine:
    def test_circle_fit(self):
        fit = inflection_line_fit(circle2d(2000), UNIT)
        np.testing.assert_allclose(fit.a, 0.0, atol=1e-6)
        assert fit.c == pytest.approx(1.0, abs=1e-4)
        assert fit.report.rms <= 1e-8 + 1e-4

    def test_generic_curve_large_residual(self, rng):
        fit = inflection_line_fit(fourier_arc(rng, n=2, samples=2000), UNIT)
        assert fit.report.rms > 1e-2

    def test_straight_segment_rank_deficient(self):
        fit = inflection_line_fit(straight_line(100, n=2), UNIT)
        assert fit.rank_deficient

    def test_supplied_constants(self):
        curve = circle2d(2000)
        fit = inflection_line_fit(curve, UNIT, a=np.zeros(2), c=1.0)
        assert fit.report.rms <= 1e-4


class TestMomentAlignment:
    def test_cond5_positive_and_matches_square(self):
        rng = np.random.default_rng(2)
        a = rng.uniform(-1, 1, 3)
        b = rng.uniform(-1, 1, 3)
        profile = SinusoidalProfile(1.0, 1.5, 0.0)
        curve = integrate(Cond5System(a, b, profile), [0, 0, 0, 1, 0, 0], 0.0, 20.0, 40000).curve()
        mu, _ = holonomy_multiplier(curve, a, b)
        values, positive = moment_alignment_check(curve, profile, mu, a, b)
        assert positive
        field = -mu * curve.derive(1) + np.cross(a[None, :], curve.positions) + b[None, :]
        squares = np.einsum("ij,ij->i", field, field)
        assert np.max(np.abs(values - squares)) <= 1e-6

    def test_straight_segment_vacuous(self):
        values, positive = moment_alignment_check(
            straight_line(100), UNIT, 0.3, np.array([0.1, 0, 0]), np.array([0, 0.2, 0])
        )
        assert positive

    def test_orientation_flip_negates(self):
        curve = circle3d(2000)
        b = np.array([0.0, 0.0, 1.0])
        values, positive = moment_alignment_check(curve, UNIT, 0.0, np.zeros(3), b)
        assert positive and np.all(values[2:-2] > 0.5)
        flipped = CurveSamples(curve.positions[::-1].copy(), curve.h)
        values_flipped, positive_flipped = moment_alignment_check(
            flipped, UNIT, 0.0, np.zeros(3), b
        )
        assert not positive_flipped
        np.testing.assert_allclose(values_flipped[2:-2], -values[::-1][2:-2], atol=1e-4)


class TestEnergyFromMultipliers:
    def test_circle(self):
        curve = circle3d(2000)
        lam = arclength_multiplier(curve, UNIT, np.zeros(3))
        got = energy_from_multipliers(curve, lam, np.zeros(3))
        assert got == pytest.approx(np.pi, abs=1e-4)
        assert got == pytest.approx(bending_energy(curve, UNIT), abs=1e-4)

    def test_straight_segment(self):
        curve = straight_line(200)
        a = np.array([1.0, 0.0, 0.0])
        lam = arclength_multiplier(curve, UNIT, a)
        assert energy_from_multipliers(curve, lam, a) == pytest.approx(0.0, abs=1e-10)
