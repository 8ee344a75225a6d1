import numpy as np
import pytest

from reachcert import (
    LinearSystem,
    NoiseModel,
    SynthesisError,
    TargetBall,
    certificate_from_dict,
    certificate_to_dict,
    load_certificate,
    save_certificate,
    synthesize_composite,
    synthesize_logarithmic,
    synthesize_quadratic,
)
from reachcert.verify import exact_quadratic_drift

from conftest import random_stable_matrix, rotation_matrix


class TestQuadratic:
    def test_scalar_closed_form(self, unit_ball_1d):
        # A = [0.5]: Q = 1/(1-0.25) = 4/3; compact^2 = tr(Q * 1/3) = 4/9;
        # r0 = 0.25; b = lam_min R^2 / 2 = 2/3; delta = 0.75 * b.
        system = LinearSystem(A=[[0.5]], B=[[1.0]], noise=NoiseModel.uniform([1.0]))
        cert = synthesize_quadratic(system, unit_ball_1d)
        assert cert.Q[0, 0] == pytest.approx(4.0 / 3.0, abs=1e-12)
        assert cert.compact_radius_sq == pytest.approx(4.0 / 9.0, abs=1e-12)
        assert cert.r0 == pytest.approx(0.25, abs=1e-12)
        assert cert.variant_b == pytest.approx(2.0 / 3.0, abs=1e-12)
        assert cert.delta == pytest.approx(0.5, abs=1e-12)

    def test_invariants_on_random_family(self):
        rng = np.random.default_rng(3)
        for n in range(1, 5):
            for _ in range(10):
                A = random_stable_matrix(n, rng)
                system = LinearSystem(A=A, B=np.eye(n), noise=NoiseModel.uniform([1.0] * n))
                cert = synthesize_quadratic(system, TargetBall(center=np.zeros(n), radius=1.0))
                assert 0.0 <= cert.r0 < 1.0
                assert cert.delta > 0.0
                assert cert.compact_radius_sq > 0.0
                # Sublevel inclusion: {x'Qx < 2b} subset of the unit ball.
                lam_min = np.linalg.eigvalsh(cert.Q).min()
                assert 2.0 * cert.variant_b / lam_min <= 1.0 + 1e-9

    def test_drift_negative_outside_compact_set(self, stable_2d, unit_ball_2d):
        cert = synthesize_quadratic(stable_2d, unit_ball_2d)
        rng = np.random.default_rng(0)
        for _ in range(200):
            d = rng.standard_normal(2)
            x = (cert.compact_radius * 1.01 + rng.uniform(0, 10)) * d / np.linalg.norm(d)
            assert exact_quadratic_drift(stable_2d, cert.Q, x) <= 1e-12

    def test_unstable_rejected(self, unit_ball_1d):
        system = LinearSystem(A=[[2.0]], B=[[1.0]], noise=NoiseModel.uniform([1.0]))
        with pytest.raises(SynthesisError):
            synthesize_quadratic(system, unit_ball_1d)

    def test_weighted_target(self, stable_2d):
        target = TargetBall(center=[0.0, 0.0], radius=1.0, weight=np.diag([4.0, 1.0]))
        cert = synthesize_quadratic(stable_2d, target)
        # Worst point of the sublevel set must stay inside the weighted ball.
        vals, vecs = np.linalg.eigh(cert.Q)
        x = vecs[:, 0] * np.sqrt(2.0 * cert.variant_b / vals[0]) * (1.0 - 1e-9)
        assert target.norm_of(x) < target.radius + 1e-9


class TestLogarithmic:
    def test_rotation_unit_q(self, rotation_system, unit_ball_2d):
        cert = synthesize_logarithmic(rotation_system, unit_ball_2d, seed=0)
        assert np.allclose(cert.Q_star, np.eye(2), atol=1e-10)
        assert cert.compact_radius_star >= np.e
        assert cert.delta > 0.0
        assert 0.0 < cert.epsilon <= 1.0

    def test_random_walk(self, random_walk):
        cert = synthesize_logarithmic(random_walk, TargetBall(center=[0.0], radius=2.0), seed=0)
        assert cert.Q_star[0, 0] == pytest.approx(1.0, abs=1e-12)
        # b = lam_min R^2 / 2 = 2 for the radius-2 ball.
        assert cert.variant_b == pytest.approx(2.0, abs=1e-12)

    def test_norm_preserved(self, rotation_system, unit_ball_2d):
        cert = synthesize_logarithmic(rotation_system, unit_ball_2d, seed=0)
        A, Q = rotation_system.A, cert.Q_star
        assert np.allclose(A.T @ Q @ A, Q, atol=1e-9)

    def test_stable_rejected(self, stable_2d, unit_ball_2d):
        with pytest.raises(SynthesisError):
            synthesize_logarithmic(stable_2d, unit_ball_2d)

    def test_high_dimension_rejected(self):
        system = LinearSystem(A=np.eye(3), B=np.eye(3), noise=NoiseModel.uniform([1.0] * 3))
        with pytest.raises(SynthesisError):
            synthesize_logarithmic(system, TargetBall(center=np.zeros(3), radius=1.0))

    def test_determinism(self, rotation_system, unit_ball_2d):
        a = synthesize_logarithmic(rotation_system, unit_ball_2d, seed=5)
        b = synthesize_logarithmic(rotation_system, unit_ball_2d, seed=5)
        assert a.compact_radius_star == b.compact_radius_star
        assert a.delta == b.delta
        assert a.epsilon == b.epsilon


class TestComposite:
    @pytest.fixture
    def mixed_system(self):
        A = np.zeros((3, 3))
        A[:2, :2] = rotation_matrix(np.pi / 4)
        A[2, 2] = 0.5
        return LinearSystem(A=A, B=np.eye(3), noise=NoiseModel.uniform([1.0] * 3))

    def test_candidate_constructed_unverified(self, mixed_system):
        cert = synthesize_composite(mixed_system, TargetBall(center=np.zeros(3), radius=1.5))
        assert cert.kind == "composite"
        assert cert.verified is False
        assert cert.unit_dim == 2
        assert cert.delta > 0.0

    def test_split_dimensions_sum(self, mixed_system):
        cert = synthesize_composite(mixed_system, TargetBall(center=np.zeros(3), radius=1.5))
        assert cert.unit_dim + cert.stable_cert.Q.shape[0] == 3
        # Transform round trips.
        assert np.allclose(cert.transform @ cert.transform_inv, np.eye(3), atol=1e-9)

    def test_fully_critical_rejected(self, rotation_system, unit_ball_2d):
        with pytest.raises(SynthesisError):
            synthesize_composite(rotation_system, unit_ball_2d)


class TestSerialization:
    def test_quadratic_round_trip(self, tmp_path, stable_2d, unit_ball_2d):
        cert = synthesize_quadratic(stable_2d, unit_ball_2d)
        path = tmp_path / "quad.json"
        save_certificate(cert, path)
        again = load_certificate(path)
        assert np.allclose(again.Q, cert.Q)
        assert again.delta == cert.delta
        assert again.kind == "quadratic"

    def test_logarithmic_round_trip(self, tmp_path, rotation_system, unit_ball_2d):
        cert = synthesize_logarithmic(rotation_system, unit_ball_2d, seed=0)
        path = tmp_path / "log.json"
        save_certificate(cert, path)
        again = load_certificate(path)
        assert np.allclose(again.Q_star, cert.Q_star)
        assert again.compact_radius_star == cert.compact_radius_star

    def test_composite_round_trip(self, tmp_path):
        A = np.zeros((3, 3))
        A[:2, :2] = rotation_matrix(np.pi / 4)
        A[2, 2] = 0.5
        system = LinearSystem(A=A, B=np.eye(3), noise=NoiseModel.uniform([1.0] * 3))
        cert = synthesize_composite(system, TargetBall(center=np.zeros(3), radius=1.5))
        path = tmp_path / "comp.json"
        save_certificate(cert, path)
        again = load_certificate(path)
        assert np.allclose(again.M, cert.M)
        assert again.verified == cert.verified
        X = np.random.default_rng(0).standard_normal((20, 3)) * 30.0
        assert np.allclose(again.drift_values(X), cert.drift_values(X))

    def test_non_pd_rejected(self):
        bad = {
            "kind": "quadratic",
            "Q": [[1.0, 2.0], [2.0, 1.0]],
            "compact_radius_sq": 1.0,
            "r0": 0.5,
            "b": 0.1,
            "delta": 0.05,
        }
        with pytest.raises(ValueError):
            certificate_from_dict(bad)

    def test_dict_round_trip_preserves_values(self, stable_2d, unit_ball_2d):
        cert = synthesize_quadratic(stable_2d, unit_ball_2d)
        again = certificate_from_dict(certificate_to_dict(cert))
        assert again.r0 == cert.r0
        assert again.variant_b == cert.variant_b
