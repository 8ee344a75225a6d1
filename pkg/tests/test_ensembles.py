import numpy as np
import pytest

from reachcert import (
    LinearSystem,
    NoiseModel,
    TargetBall,
    TrajectorySeed,
    decay_exponent,
    ensemble_states,
    hitting_stats,
    simulate,
)
from reachcert.ensembles import NOISE_CHUNK
from reachcert.systems import sample_noise, step_batch


class TestSimulate:
    def test_reproducible(self, random_walk):
        a = simulate(random_walk, [0.0], 500, TrajectorySeed(1, 0))
        b = simulate(random_walk, [0.0], 500, TrajectorySeed(1, 0))
        assert np.array_equal(a.states, b.states)

    def test_chunking_matches_single_stream(self, random_walk):
        # A horizon crossing the chunk boundary must replay exactly the
        # same noise stream as drawing it in one shot.
        horizon = NOISE_CHUNK + 100
        traj = simulate(random_walk, [0.0], horizon, TrajectorySeed(3, 7))
        W = sample_noise(random_walk.noise, TrajectorySeed(3, 7), horizon)
        x = np.zeros((1, 1))
        manual = [0.0]
        for k in range(horizon):
            x = step_batch(random_walk, x, W[k].reshape(1, -1))
            manual.append(x[0, 0])
        assert np.array_equal(traj.states[:, 0], np.array(manual))

    def test_overflow_truncates(self):
        system = LinearSystem(A=[[10.0]], B=[[1.0]], noise=NoiseModel.uniform([1.0]))
        traj = simulate(system, [1.0], 1000, TrajectorySeed(0, 0))
        assert traj.overflowed
        assert len(traj.states) < 1001


class TestHittingStats:
    def test_initial_state_in_target(self, random_walk, unit_ball_1d):
        stats = hitting_stats(random_walk, unit_ball_1d, [0.0], 50, 10, base_seed=0)
        assert stats.hit_fraction == 1.0
        assert stats.hitting_time_quantiles["0.5"] == 0

    def test_reproducible(self, random_walk, unit_ball_1d):
        a = hitting_stats(random_walk, unit_ball_1d, [5.0], 200, 2000, base_seed=11)
        b = hitting_stats(random_walk, unit_ball_1d, [5.0], 200, 2000, base_seed=11)
        assert a.to_dict() == b.to_dict()

    def test_batch_size_invariant(self, random_walk, unit_ball_1d):
        a = hitting_stats(random_walk, unit_ball_1d, [5.0], 300, 1500, base_seed=2, batch_size=7)
        b = hitting_stats(random_walk, unit_ball_1d, [5.0], 300, 1500, base_seed=2, batch_size=300)
        assert a.to_dict() == b.to_dict()

    def test_threads_invariant(self, random_walk, unit_ball_1d, monkeypatch):
        base = hitting_stats(random_walk, unit_ball_1d, [5.0], 300, 1500, base_seed=2, batch_size=50)
        monkeypatch.setenv("REACHCERT_THREADS", "4")
        threaded = hitting_stats(
            random_walk, unit_ball_1d, [5.0], 300, 1500, base_seed=2, batch_size=50
        )
        assert base.to_dict() == threaded.to_dict()

    def test_unstable_divergence(self, unit_ball_1d):
        system = LinearSystem(A=[[2.0]], B=[[1.0]], noise=NoiseModel.uniform([1.0]))
        stats = hitting_stats(system, unit_ball_1d, [10.0], 200, 1000, base_seed=4)
        assert stats.divergence_fraction >= 0.95
        assert stats.overflow_fraction >= 0.95

    def test_random_walk_recurrent(self, random_walk):
        stats = hitting_stats(
            random_walk, TargetBall(center=[0.0], radius=2.0), [10.0], 200, 50_000, base_seed=7
        )
        assert stats.hit_fraction >= 0.9


class TestEnsembleStates:
    def test_snapshot_consistency(self, random_walk):
        # Snapshot at step k equals the simulated trajectory state at k.
        states = ensemble_states(random_walk, [0.0], [10, 100], 5, base_seed=9)
        for tid in range(5):
            traj = simulate(random_walk, [0.0], 100, TrajectorySeed(9, tid))
            assert states[10][tid, 0] == traj.states[10, 0]
            assert states[100][tid, 0] == traj.states[100, 0]

    def test_step_zero(self, random_walk):
        states = ensemble_states(random_walk, [3.0], [0], 4, base_seed=0)
        assert np.all(states[0] == 3.0)


class TestDecayExponent:
    def test_1d_random_walk_slope(self, random_walk, unit_ball_1d):
        # Occupancy of a fixed ball decays like k^{-1/2} in one dimension.
        fit = decay_exponent(
            random_walk,
            unit_ball_1d,
            k_grid=[2**j for j in range(4, 11)],
            n_traj=20_000,
            base_seed=13,
        )
        assert fit.slope == pytest.approx(-0.5, abs=0.15)

    def test_insufficient_data(self, unit_ball_1d):
        system = LinearSystem(A=[[2.0]], B=[[1.0]], noise=NoiseModel.uniform([1.0]))
        # Unstable from afar: the ball is never occupied.
        with pytest.raises(ValueError):
            decay_exponent(
                system,
                unit_ball_1d,
                k_grid=[16, 32, 64, 128],
                n_traj=200,
                base_seed=0,
                x0=[50.0],
            )
