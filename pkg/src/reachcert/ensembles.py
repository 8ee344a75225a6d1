"""Ensemble simulation: hitting statistics, divergence detection, and the
occupancy-decay exponent estimate for critical systems.

Every trajectory owns an independent RNG stream derived from
(base_seed, trajectory_index), so results are reproducible and
independent of batching or thread scheduling.  Stepping is vectorized
across trajectories; noise is drawn in fixed-size chunks per trajectory
so that a chunked ensemble replays exactly the same stream as a
single-trajectory simulation.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .systems import TargetBall, TrajectorySeed, step_batch

__all__ = [
    "Trajectory",
    "EnsembleStats",
    "DecayFit",
    "simulate",
    "hitting_stats",
    "decay_exponent",
    "ensemble_states",
    "OVERFLOW_GUARD",
]

OVERFLOW_GUARD = 1e300
NOISE_CHUNK = 1024


def _max_workers() -> int:
    try:
        return max(1, int(os.environ.get("REACHCERT_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class Trajectory:
    states: np.ndarray  # (k+1, n); shorter than horizon+1 if overflowed
    overflowed: bool


@dataclass(frozen=True)
class EnsembleStats:
    trajectories: int
    horizon: int
    base_seed: int
    hit_fraction: float
    hitting_time_quantiles: dict
    divergence_fraction: float
    divergence_threshold: float
    overflow_fraction: float

    def to_dict(self) -> dict:
        return {
            "trajectories": self.trajectories,
            "horizon": self.horizon,
            "base_seed": self.base_seed,
            "hit_fraction": self.hit_fraction,
            "hitting_time_quantiles": dict(self.hitting_time_quantiles),
            "divergence_fraction": self.divergence_fraction,
            "divergence_threshold": self.divergence_threshold,
            "overflow_fraction": self.overflow_fraction,
        }


@dataclass(frozen=True)
class DecayFit:
    ks: tuple
    p_hat: tuple
    slope: float
    stderr: float
    dropped: int
    trajectories: int

    def to_dict(self) -> dict:
        return {
            "ks": list(self.ks),
            "p_hat": list(self.p_hat),
            "slope": self.slope,
            "stderr": self.stderr,
            "dropped": self.dropped,
            "trajectories": self.trajectories,
        }


def _member_rows(target, X: np.ndarray) -> np.ndarray:
    """Row-wise membership; target is a TargetBall or an (N, n) -> bool mask."""
    if callable(target):
        return np.asarray(target(X), dtype=bool)
    D = X - target.center
    if target.weight is None:
        sq = np.einsum("ij,ij->i", D, D)
        return sq < target.radius**2
    sq = np.einsum("ij,jk,ik->i", D, target.weight, D)
    return sq < target.radius**2


def _draw_chunk(noise, rngs, indices, length):
    """(len(indices), length, m) noise block, one stream per trajectory."""
    m = noise.dimension
    out = np.empty((len(indices), length, m))
    if noise.kind == "gaussian":
        L = np.linalg.cholesky(noise.cov)
        for row, idx in enumerate(indices):
            out[row] = rngs[idx].standard_normal(size=(length, m)) @ L.T
    else:
        h = noise.half_widths
        for row, idx in enumerate(indices):
            out[row] = rngs[idx].uniform(-1.0, 1.0, size=(length, m)) * h
    return out


def simulate(system, x0, horizon: int, seed) -> Trajectory:
    """Single trajectory of length horizon+1 from x0, or shorter on overflow."""
    if horizon < 0:
        raise ValueError("horizon must be non-negative")
    if isinstance(seed, int):
        seed = TrajectorySeed(seed, 0)
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    n = x0.size
    states = np.empty((horizon + 1, n))
    states[0] = x0
    rng = seed.rng()
    noise = system.noise
    x = x0.reshape(1, -1)
    k = 0
    while k < horizon:
        length = min(NOISE_CHUNK, horizon - k)
        W = _draw_chunk(noise, [rng], [0], length)[0]
        for t in range(length):
            x = step_batch(system, x, W[t].reshape(1, -1))
            if not np.all(np.isfinite(x)) or np.any(np.abs(x) > OVERFLOW_GUARD):
                return Trajectory(states=states[: k + 1].copy(), overflowed=True)
            k += 1
            states[k] = x[0]
    return Trajectory(states=states, overflowed=False)


def _hitting_batch(system, target, x0, indices, horizon, base_seed, threshold):
    noise = system.noise
    rngs = {i: TrajectorySeed(base_seed, i).rng() for i in indices}
    nb = len(indices)
    X = np.tile(np.asarray(x0, dtype=float), (nb, 1))
    hit_time = np.full(nb, -1, dtype=np.int64)
    overflowed = np.zeros(nb, dtype=bool)
    alive = np.ones(nb, dtype=bool)

    initial = _member_rows(target, X)
    hit_time[initial] = 0
    alive[initial] = False

    k = 0
    while k < horizon and alive.any():
        length = min(NOISE_CHUNK, horizon - k)
        rows = np.flatnonzero(alive)
        W = _draw_chunk(noise, rngs, [indices[r] for r in rows], length)
        Xa = X[rows]
        live = np.ones(len(rows), dtype=bool)
        for t in range(length):
            cur = np.flatnonzero(live)
            if cur.size == 0:
                break
            Xa[cur] = step_batch(system, Xa[cur], W[cur, t])
            bad = ~np.all(np.isfinite(Xa[cur]), axis=1) | (
                np.max(np.abs(Xa[cur]), axis=1) > OVERFLOW_GUARD
            )
            if bad.any():
                overflowed[rows[cur[bad]]] = True
                live[cur[bad]] = False
                cur = cur[~bad]
            if cur.size:
                hits = _member_rows(target, Xa[cur])
                if hits.any():
                    hit_time[rows[cur[hits]]] = k + t + 1
                    live[cur[hits]] = False
        X[rows] = Xa
        alive[rows] = live & ~overflowed[rows] & (hit_time[rows] < 0)
        k += length

    hit = hit_time >= 0
    # Overflowed rows may hold values whose squares overflow; they are
    # divergent by definition, so compute norms only for the rest.
    final_norm = np.linalg.norm(np.where(overflowed[:, None], 0.0, X), axis=1)
    divergent = overflowed | (~hit & (final_norm > threshold))
    return hit_time, divergent, overflowed


def hitting_stats(
    system,
    target,
    x0,
    n_traj: int,
    horizon: int,
    base_seed: int,
    divergence_threshold: float | None = None,
    batch_size: int = 4096,
) -> EnsembleStats:
    """First-hit and divergence statistics over a seeded ensemble.

    ``target`` is a TargetBall or a callable mapping an (N, n) state
    array to a boolean membership mask (for non-ball regions).
    Trajectories freeze at their first target hit; a trajectory is
    divergent if it overflowed or its final state norm exceeds the
    threshold (default 1e6 * (1 + ||x0||)) without hitting.
    """
    if n_traj < 1:
        raise ValueError("need at least one trajectory")
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if divergence_threshold is None:
        divergence_threshold = 1e6 * (1.0 + float(np.linalg.norm(x0)))

    batches = [list(range(s, min(s + batch_size, n_traj))) for s in range(0, n_traj, batch_size)]

    def run(indices):
        return _hitting_batch(system, target, x0, indices, horizon, base_seed, divergence_threshold)

    workers = _max_workers()
    if workers > 1 and len(batches) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, batches))
    else:
        results = [run(b) for b in batches]

    hit_times = np.concatenate([r[0] for r in results])
    divergent = np.concatenate([r[1] for r in results])
    overflowed = np.concatenate([r[2] for r in results])

    hit = hit_times >= 0
    hit_fraction = float(hit.mean())
    quantiles = {}
    if hit.any():
        sorted_times = np.sort(hit_times[hit])
        for q in (0.5, 0.9, 0.99):
            if hit_fraction >= q:
                idx = min(int(np.ceil(q * n_traj)) - 1, sorted_times.size - 1)
                quantiles[str(q)] = int(sorted_times[max(idx, 0)])
    return EnsembleStats(
        trajectories=n_traj,
        horizon=horizon,
        base_seed=base_seed,
        hit_fraction=hit_fraction,
        hitting_time_quantiles=quantiles,
        divergence_fraction=float(divergent.mean()),
        divergence_threshold=divergence_threshold,
        overflow_fraction=float(overflowed.mean()),
    )


def _snapshot_batch(system, x0, indices, ks, base_seed):
    """States of the given trajectories at each step in ks (sorted)."""
    noise = system.noise
    rngs = {i: TrajectorySeed(base_seed, i).rng() for i in indices}
    nb = len(indices)
    X = np.tile(np.asarray(x0, dtype=float), (nb, 1))
    out = {}
    if ks and ks[0] == 0:
        out[0] = X.copy()
    max_k = max(ks) if ks else 0
    next_idx = 1 if (ks and ks[0] == 0) else 0
    k = 0
    while k < max_k:
        length = min(NOISE_CHUNK, max_k - k)
        W = _draw_chunk(noise, rngs, indices, length)
        for t in range(length):
            X = step_batch(system, X, W[:, t])
            k += 1
            if next_idx < len(ks) and ks[next_idx] == k:
                out[k] = X.copy()
                next_idx += 1
    return out


def ensemble_states(system, x0, ks, n_traj: int, base_seed: int, batch_size: int = 20_000):
    """Snapshot ensemble states at the requested steps: {k: (n_traj, n) array}."""
    ks = sorted(set(int(k) for k in ks))
    if any(k < 0 for k in ks):
        raise ValueError("snapshot steps must be non-negative")
    batches = [list(range(s, min(s + batch_size, n_traj))) for s in range(0, n_traj, batch_size)]

    def run(indices):
        return _snapshot_batch(system, x0, indices, ks, base_seed)

    workers = _max_workers()
    if workers > 1 and len(batches) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, batches))
    else:
        results = [run(b) for b in batches]
    return {k: np.concatenate([r[k] for r in results], axis=0) for k in ks}


def decay_exponent(
    system,
    ball: TargetBall,
    k_grid=None,
    n_traj: int = 100_000,
    base_seed: int = 0,
    x0=None,
) -> DecayFit:
    """Log-log slope of the ball-occupancy probability P(x_k in ball) vs k.

    Starts at the origin by default.  Grid points with zero occupancy are
    dropped; at least 4 usable points are required for the fit.
    """
    n = system.dimension
    if x0 is None:
        x0 = np.zeros(n)
    if k_grid is None:
        k_grid = [2**j for j in range(4, 15)]
    ks = sorted(set(int(k) for k in k_grid))
    if any(k < 1 for k in ks):
        raise ValueError("k_grid entries must be >= 1")

    states = ensemble_states(system, x0, ks, n_traj, base_seed)
    p_hat = np.array([float(_member_rows(ball, states[k]).mean()) for k in ks])

    usable = p_hat > 0.0
    dropped = int(np.sum(~usable))
    if usable.sum() < 4:
        raise ValueError(
            f"insufficient data: only {int(usable.sum())} nonzero occupancy points "
            f"(need 4) with {n_traj} trajectories"
        )
    logs_k = np.log(np.asarray(ks, dtype=float)[usable])
    logs_p = np.log(p_hat[usable])
    coeffs, cov = np.polyfit(logs_k, logs_p, 1, cov=True)
    return DecayFit(
        ks=tuple(ks),
        p_hat=tuple(float(p) for p in p_hat),
        slope=float(coeffs[0]),
        stderr=float(np.sqrt(cov[0, 0])),
        dropped=dropped,
        trajectories=n_traj,
    )
