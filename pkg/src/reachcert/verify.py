"""Numerical verification of drift (V1) and variant (V2) conditions.

The drift condition asks that the expected one-step change of V is
non-positive outside a compact set; the variant condition asks that U
decreases by at least delta with positive probability on each V-sublevel
set, stays below H(r) there, and that the set {U <= 0} lies inside the
target.  Quadratic drifts on linear systems are checked with the exact
closed-form expectation; everything else uses seeded Monte Carlo on
deterministic shells, reporting confidence intervals rather than claiming
proof.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import is_symmetric_positive_definite
from .systems import LinearSystem, TargetBall, TrajectorySeed, contains, sample_noise, step_batch

__all__ = [
    "ShellPlan",
    "DriftViolation",
    "DriftReport",
    "VariantLevel",
    "VariantReport",
    "exact_quadratic_drift",
    "mc_drift",
    "verify_drift",
    "verify_variant",
    "default_shell_plan",
]

DRIFT_TOL_SCALE = 1e-9
MIN_ACCEPT_RATE = 1e-6


@dataclass(frozen=True)
class ShellPlan:
    """Deterministic sampling plan for the drift check.

    Shells are Euclidean radii outside the certificate's compact set;
    each shell gets ``points_per_shell`` directions and each point
    ``noise_samples`` Monte Carlo draws (ignored on the exact path).
    """

    radii: tuple
    points_per_shell: int = 64
    noise_samples: int = 10_000
    seed: int = 0


def default_shell_plan(certificate, dimension: int, seed: int = 0) -> ShellPlan:
    base = max(float(certificate.compact_radius), 1e-6)
    radii = tuple(base * 2.0**j for j in range(7))
    points = 64 if dimension <= 3 else 256
    return ShellPlan(radii=radii, points_per_shell=points, seed=seed)


@dataclass(frozen=True)
class DriftViolation:
    x: tuple
    estimate: float
    half_width: float
    tolerance: float


@dataclass(frozen=True)
class DriftReport:
    plan: ShellPlan
    exact: bool
    shell_worst: tuple  # (radius, worst estimate, half width) per shell
    violations: tuple
    passed: bool

    def to_dict(self) -> dict:
        return {
            "exact": self.exact,
            "shells": [
                {"radius": r, "worst_estimate": e, "half_width": h}
                for (r, e, h) in self.shell_worst
            ],
            "violations": [
                {"x": list(v.x), "estimate": v.estimate, "half_width": v.half_width}
                for v in self.violations
            ],
            "passed": self.passed,
            "points_per_shell": self.plan.points_per_shell,
            "noise_samples": self.plan.noise_samples,
            "seed": self.plan.seed,
        }


@dataclass(frozen=True)
class VariantLevel:
    level: float
    delta: float
    epsilon_hat: float
    epsilon_half_width: float
    samples: int
    h_violations: int


@dataclass(frozen=True)
class VariantReport:
    levels: tuple  # VariantLevel entries
    inclusion_violations: int
    passed: bool

    def to_dict(self) -> dict:
        return {
            "levels": [
                {
                    "level": lv.level,
                    "delta": lv.delta,
                    "epsilon_hat": lv.epsilon_hat,
                    "epsilon_half_width": lv.epsilon_half_width,
                    "samples": lv.samples,
                    "h_violations": lv.h_violations,
                }
                for lv in self.levels
            ],
            "inclusion_violations": self.inclusion_violations,
            "passed": self.passed,
        }


def exact_quadratic_drift(system: LinearSystem, Q, x) -> float:
    """Exact E[V(Ax+Bw)] - V(x) for V(x) = x'Qx.

    Equals x'(A'QA - Q)x + tr(B'QB Sigma_w); no sampling error.
    """
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    if not is_symmetric_positive_definite(Q):
        raise ValueError("Q must be symmetric positive definite")
    x = np.asarray(x, dtype=float).reshape(-1)
    A, B = system.A, system.B
    if Q.shape[0] != A.shape[0] or x.size != A.shape[0]:
        raise ValueError("dimension mismatch")
    M = A.T @ Q @ A - Q
    noise_term = float(np.trace(B.T @ Q @ B @ system.noise.covariance))
    return float(x @ M @ x) + noise_term


def _exact_quadratic_drift_batch(system: LinearSystem, Q, X) -> np.ndarray:
    M = system.A.T @ Q @ system.A - Q
    noise_term = float(np.trace(system.B.T @ Q @ system.B @ system.noise.covariance))
    return np.einsum("ij,jk,ik->i", X, M, X) + noise_term


def mc_drift(system, V, x, samples: int = 10_000, seed: int = 0, antithetic: bool | None = None):
    """Monte Carlo estimate of E[V(f(x,w))] - V(x) with a 3-sigma half-width.

    ``V`` must accept an (N, n) array of states and return N values.  For
    symmetric noise laws the estimator defaults to antithetic pairing
    (w, -w), which cancels the first-order term of V and shrinks the
    variance by orders of magnitude for slowly varying drifts.
    """
    if samples < 100:
        raise ValueError("need at least 100 samples")
    x = np.asarray(x, dtype=float).reshape(-1)
    if antithetic is None:
        antithetic = system.noise.symmetric
    n_draws = samples // 2 if antithetic else samples
    W = sample_noise(system.noise, TrajectorySeed(seed, 0), n_draws)
    X = np.broadcast_to(x, (n_draws, x.size))

    v0 = float(np.asarray(V(x.reshape(1, -1)))[0])
    if not np.isfinite(v0):
        raise ValueError(f"drift function not finite at x={x}")

    succ = step_batch(system, X, W)
    vals = np.asarray(V(succ), dtype=float)
    if antithetic:
        succ2 = step_batch(system, X, -W)
        vals = 0.5 * (vals + np.asarray(V(succ2), dtype=float))
    if not np.all(np.isfinite(vals)):
        bad = succ[~np.isfinite(vals)][0]
        raise ValueError(f"drift function not finite at successor {bad}")

    diffs = vals - v0
    mean = float(diffs.mean())
    half_width = float(3.0 * diffs.std(ddof=1) / np.sqrt(diffs.size))
    return mean, half_width


def _sphere_points(n: int, count: int, radius: float, rng) -> np.ndarray:
    z = rng.standard_normal(size=(count, n))
    norms = np.linalg.norm(z, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return radius * z / norms


def verify_drift(system, certificate, plan: ShellPlan | None = None, seed: int = 0) -> DriftReport:
    """Check the drift condition on shells outside the compact set.

    Quadratic certificates are evaluated with the exact expectation (no
    statistical error); other drifts via `mc_drift`.  A point fails only
    if its 3-sigma interval lies entirely above ``1e-9 * (1 + |V(x)|)``.
    """
    n = system.dimension
    if plan is None:
        plan = default_shell_plan(certificate, n, seed=seed)
    compact = float(certificate.compact_radius)
    for r in plan.radii:
        if r < compact * (1.0 - 1e-12):
            raise ValueError(f"shell radius {r} lies inside the compact set (radius {compact})")

    exact = certificate.kind == "quadratic" and isinstance(system, LinearSystem)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=plan.seed, spawn_key=(0xD21F7,)))
    shell_worst = []
    violations = []
    for j, radius in enumerate(plan.radii):
        pts = _sphere_points(n, plan.points_per_shell, radius, rng)
        if getattr(certificate, "positive_quadrant", False):
            pts = np.abs(pts)
        if exact:
            est = _exact_quadratic_drift_batch(system, certificate.Q, pts)
            hws = np.zeros_like(est)
        else:
            est = np.empty(len(pts))
            hws = np.empty(len(pts))
            for i, x in enumerate(pts):
                est[i], hws[i] = mc_drift(
                    system,
                    certificate.drift_values,
                    x,
                    samples=plan.noise_samples,
                    seed=plan.seed + 7919 * j + i,
                )
        v_at = np.asarray(certificate.drift_values(pts), dtype=float)
        tols = DRIFT_TOL_SCALE * (1.0 + np.abs(v_at))
        bad = est - hws > tols
        worst = int(np.argmax(est - hws - tols))
        shell_worst.append((float(radius), float(est[worst]), float(hws[worst])))
        for i in np.flatnonzero(bad):
            violations.append(
                DriftViolation(
                    x=tuple(pts[i]), estimate=float(est[i]), half_width=float(hws[i]), tolerance=float(tols[i])
                )
            )
    return DriftReport(
        plan=plan,
        exact=exact,
        shell_worst=tuple(shell_worst),
        violations=tuple(violations),
        passed=not violations,
    )


def _sample_level_region(certificate, n, level, count, rng, positive_quadrant=False):
    """Rejection-sample count points from {V <= level, U > 0}."""
    bound = float(certificate.level_bound(level))
    accepted = []
    tried = 0
    got = 0
    while got < count:
        batch = max(4 * (count - got), 1024)
        pts = rng.uniform(-bound, bound, size=(batch, n))
        if positive_quadrant:
            pts = np.abs(pts)
        tried += batch
        ok = (np.asarray(certificate.drift_values(pts)) <= level) & (
            np.asarray(certificate.variant_values(pts)) > 0.0
        )
        sel = pts[ok]
        if sel.size:
            accepted.append(sel[: count - got])
            got += len(accepted[-1])
        if tried > 1024 and got / tried < MIN_ACCEPT_RATE:
            raise ValueError(
                f"rejection sampling acceptance rate below {MIN_ACCEPT_RATE} at level {level}"
            )
    return np.concatenate(accepted, axis=0)


def verify_variant(
    system,
    certificate,
    target: TargetBall,
    levels=None,
    samples: int = 20_000,
    seed: int = 0,
    boundary_points: int = 256,
) -> VariantReport:
    """Check the variant condition per level plus the target inclusion.

    ``target`` is either a TargetBall or a callable predicate x -> bool
    describing an arbitrary open region G.  Per level r: sample x from
    {V <= r, U > 0}, draw one noise vector per x, and estimate the
    probability that U decreases by at least the certificate's delta.  Exact checks: U(x) <= H(r) on all samples, and
    random points of {U = 0} belong to the target.  Passes iff every
    level's probability estimate is separated from 0 by 3 sigma, delta is
    positive, and the exact checks have no violations.
    """
    n = system.dimension
    delta = float(certificate.delta)
    if levels is None:
        levels = certificate.default_levels()
    levels = [float(r) for r in levels]
    if not levels:
        raise ValueError("need at least one level")
    positive_quadrant = getattr(certificate, "positive_quadrant", False)

    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(0x7A21,)))
    level_rows = []
    for r in levels:
        pts = _sample_level_region(certificate, n, r, samples, rng, positive_quadrant)
        W = _noise_matrix(system, rng, len(pts))
        succ = step_batch(system, pts, W)
        dU = np.asarray(certificate.variant_values(succ)) - np.asarray(
            certificate.variant_values(pts)
        )
        eps_hat = float(np.mean(dU <= -delta))
        eps_hw = float(3.0 * np.sqrt(max(eps_hat * (1.0 - eps_hat), 1.0 / len(pts)) / len(pts)))
        h_bad = int(np.sum(np.asarray(certificate.variant_values(pts)) > certificate.h_bound(r) + 1e-12))
        level_rows.append(
            VariantLevel(
                level=r,
                delta=delta,
                epsilon_hat=eps_hat,
                epsilon_half_width=eps_hw,
                samples=len(pts),
                h_violations=h_bad,
            )
        )

    inclusion_bad = _check_inclusion(certificate, target, n, boundary_points, rng, positive_quadrant)
    passed = (
        delta > 0.0
        and all(lv.epsilon_hat - lv.epsilon_half_width > 0.0 for lv in level_rows)
        and all(lv.h_violations == 0 for lv in level_rows)
        and inclusion_bad == 0
    )
    return VariantReport(levels=tuple(level_rows), inclusion_violations=inclusion_bad, passed=passed)


def _noise_matrix(system, rng, count):
    noise = system.noise
    if noise.kind == "gaussian":
        L = np.linalg.cholesky(noise.cov)
        return rng.standard_normal(size=(count, noise.dimension)) @ L.T
    return rng.uniform(-1.0, 1.0, size=(count, noise.dimension)) * noise.half_widths


def _check_inclusion(certificate, target, n, count, rng, positive_quadrant):
    """Count sampled points of the zero level set of U that are outside G."""
    bad = 0
    dirs = _sphere_points(n, count, 1.0, rng)
    if positive_quadrant:
        dirs = np.abs(dirs)
        dirs /= np.maximum(np.linalg.norm(dirs, axis=1, keepdims=True), 1e-300)
    member = target if callable(target) else (lambda x: contains(target, x))
    for d in dirs:
        x = _zero_crossing(certificate, d)
        if x is None:
            continue
        if not member(x):
            bad += 1
    return bad


def _zero_crossing(certificate, direction, t_max=1e9):
    """Bisection for U(t * direction) = 0 along a ray from the origin."""
    u0 = float(np.asarray(certificate.variant_values(np.zeros((1, len(direction)))))[0])
    if u0 >= 0.0:
        return None
    lo, hi = 0.0, 1.0
    while hi < t_max:
        u = float(np.asarray(certificate.variant_values((hi * direction).reshape(1, -1)))[0])
        if u > 0.0:
            break
        lo, hi = hi, hi * 2.0
    else:
        return None
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        u = float(np.asarray(certificate.variant_values((mid * direction).reshape(1, -1)))[0])
        if u > 0.0:
            hi = mid
        else:
            lo = mid
    # Just inside the zero level set; membership in G must hold there.
    return lo * direction
