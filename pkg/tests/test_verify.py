import json

import numpy as np
import pytest

from reachcert import (
    LinearSystem,
    NoiseModel,
    QuadraticCertificate,
    ShellPlan,
    TargetBall,
    exact_quadratic_drift,
    mc_drift,
    synthesize_logarithmic,
    synthesize_quadratic,
    verify_drift,
    verify_variant,
)
from reachcert.certificates import CustomCertificate


class TestExactDrift:
    def test_matches_formula(self, stable_2d):
        Q = np.array([[2.0, 0.5], [0.5, 1.0]])
        x = np.array([3.0, -1.0])
        A, B = stable_2d.A, stable_2d.B
        expected = x @ (A.T @ Q @ A - Q) @ x + np.trace(
            B.T @ Q @ B @ stable_2d.noise.covariance
        )
        assert exact_quadratic_drift(stable_2d, Q, x) == pytest.approx(expected, abs=1e-12)

    def test_mc_agrees_with_exact(self, stable_2d):
        Q = np.eye(2)
        x = np.array([4.0, 2.0])
        exact = exact_quadratic_drift(stable_2d, Q, x)

        def V(X):
            X = np.atleast_2d(X)
            return np.einsum("ij,ij->i", X, X)

        mean, hw = mc_drift(stable_2d, V, x, samples=200_000, seed=1)
        assert abs(mean - exact) <= hw + 1e-6

    def test_non_pd_q_rejected(self, stable_2d):
        with pytest.raises(ValueError):
            exact_quadratic_drift(stable_2d, np.diag([1.0, -1.0]), [1.0, 1.0])


class TestMcDrift:
    def test_deterministic_by_seed(self, random_walk):
        V = lambda X: np.abs(np.atleast_2d(X)[:, 0])
        a = mc_drift(random_walk, V, [3.0], samples=5000, seed=9)
        b = mc_drift(random_walk, V, [3.0], samples=5000, seed=9)
        assert a == b

    def test_antithetic_zero_variance_on_symmetric_abs(self, random_walk):
        # |3 + w| + |3 - w| = 6 exactly for |w| <= 1: pair means vanish.
        V = lambda X: np.abs(np.atleast_2d(X)[:, 0])
        mean, hw = mc_drift(random_walk, V, [3.0], samples=1000, seed=0)
        assert mean == pytest.approx(0.0, abs=1e-14)
        assert hw == pytest.approx(0.0, abs=1e-14)

    def test_antithetic_resolves_tiny_drift(self, rotation_system, unit_ball_2d):
        # The log drift at ||x|| = e^10 is ~1e-10; plain MC noise would
        # swamp it, antithetic pairing must give a non-positive interval.
        cert = synthesize_logarithmic(rotation_system, unit_ball_2d, seed=0)
        x = np.array([np.exp(10.0), 0.1])
        mean, hw = mc_drift(rotation_system, cert.drift_values, x, samples=100_000, seed=3)
        assert mean + hw <= 0.0

    def test_non_finite_v_reported(self, random_walk):
        def V(X):  # -inf at 0, nan below
            with np.errstate(invalid="ignore"):
                return np.log(np.atleast_2d(X)[:, 0])

        with pytest.raises(ValueError):
            mc_drift(random_walk, V, [-5.0], samples=1000, seed=0)


class TestVerifyDrift:
    def test_quadratic_exact_pass(self, stable_2d, unit_ball_2d):
        cert = synthesize_quadratic(stable_2d, unit_ball_2d)
        report = verify_drift(stable_2d, cert)
        assert report.exact
        assert report.passed
        assert not report.violations

    def test_violation_detected(self, unit_ball_1d):
        # Identity Q on the random walk: drift is +E[w^2] = 1/3 > 0 everywhere.
        rw = LinearSystem(A=[[1.0]], B=[[1.0]], noise=NoiseModel.uniform([1.0]))
        bad = QuadraticCertificate(
            Q=np.eye(1),
            alpha=1.0,
            compact_radius_sq=1.0,
            r0=0.99,
            variant_b=0.25,
            delta=0.01,
            noise_set_bound=1.0,
        )
        report = verify_drift(rw, bad, plan=ShellPlan(radii=(2.0, 4.0), points_per_shell=8))
        assert not report.passed
        assert report.violations

    def test_radius_inside_compact_rejected(self, stable_2d, unit_ball_2d):
        cert = synthesize_quadratic(stable_2d, unit_ball_2d)
        with pytest.raises(ValueError):
            verify_drift(stable_2d, cert, plan=ShellPlan(radii=(cert.compact_radius / 2,)))

    def test_report_deterministic(self, rotation_system, unit_ball_2d):
        cert = synthesize_logarithmic(rotation_system, unit_ball_2d, seed=0)
        plan = ShellPlan(radii=(8.0, 16.0), points_per_shell=8, noise_samples=2000, seed=4)
        a = json.dumps(verify_drift(rotation_system, cert, plan=plan).to_dict(), sort_keys=True)
        b = json.dumps(verify_drift(rotation_system, cert, plan=plan).to_dict(), sort_keys=True)
        assert a == b


class TestVerifyVariant:
    def test_quadratic_pass(self, stable_2d, unit_ball_2d):
        cert = synthesize_quadratic(stable_2d, unit_ball_2d)
        report = verify_variant(stable_2d, cert, unit_ball_2d, samples=5000, seed=0)
        assert report.passed
        assert report.inclusion_violations == 0
        for lv in report.levels:
            assert lv.epsilon_hat - lv.epsilon_half_width > 0.0
            assert lv.h_violations == 0

    def test_inclusion_violation_detected(self, random_walk):
        # U = |x| - 3 has {U <= 0} = [-3, 3], not inside the unit ball.
        cert = CustomCertificate(
            drift=lambda X: np.abs(np.atleast_2d(X)[:, 0]),
            variant=lambda X: np.abs(np.atleast_2d(X)[:, 0]) - 3.0,
            h=lambda r: r - 3.0,
            delta=0.5,
            compact_radius=3.0,
            level_radius=lambda r: r,
            levels=(5.0,),
        )
        report = verify_variant(
            random_walk, cert, TargetBall(center=[0.0], radius=1.0), samples=2000, seed=0
        )
        assert report.inclusion_violations > 0
        assert not report.passed

    def test_callable_target_region(self, random_walk):
        cert = CustomCertificate(
            drift=lambda X: np.abs(np.atleast_2d(X)[:, 0]),
            variant=lambda X: np.abs(np.atleast_2d(X)[:, 0]) - 1.0,
            h=lambda r: r - 1.0,
            delta=0.5,
            compact_radius=1.0,
            level_radius=lambda r: r,
            levels=(3.0,),
        )
        inside = verify_variant(
            random_walk, cert, lambda x: abs(x[0]) < 2.0, samples=2000, seed=0
        )
        assert inside.inclusion_violations == 0
        outside = verify_variant(
            random_walk, cert, lambda x: abs(x[0]) < 0.5, samples=2000, seed=0
        )
        assert outside.inclusion_violations > 0

    def test_empty_region_reported(self, stable_2d, unit_ball_2d):
        cert = synthesize_quadratic(stable_2d, unit_ball_2d)
        # Level far below b: {V <= r, U > 0} is empty.
        with pytest.raises(ValueError):
            verify_variant(
                stable_2d, cert, unit_ball_2d, levels=[cert.variant_b * 0.5], samples=500, seed=0
            )
