"""The two template-failure constructions, reproduced end to end.

First, a two-dimensional polynomial system whose state blows up to
2^(i(i+3)/2) before re-entering the target region; it is almost surely
reachable (with a logarithmic certificate) but admits no polynomial
drift function.  The refutation evaluates, in signed log2-magnitude
arithmetic, the inequality any valid polynomial drift would have to
satisfy between the state at the crossing time and the initial state,
and reports the first exponent i where it is violated.

Second, the one-dimensional random walk: every quadratic has constant
positive expected increment a * E[w^2] = a/3, while V(x) = |x| with
variant |x| - 1 certifies reachability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .certificates import CustomCertificate
from .systems import LinearSystem, NoiseModel, PolynomialSystem, TargetBall, TrajectorySeed
from .verify import DriftReport, ShellPlan, VariantReport, mc_drift, verify_drift, verify_variant

__all__ = [
    "Example1Instance",
    "PolyCandidate",
    "example1_system",
    "example1_closed_form",
    "example1_simulate_log2",
    "example1_bounds_hold",
    "example1_log_certificate",
    "example1_verify_log_certificate",
    "refute_polynomial_drift",
    "random_walk_system",
    "abs_certificate",
    "example2_quadratic_failure",
]


# ---------------------------------------------------------------------------
# Example 1: the polynomial system without a polynomial drift
# ---------------------------------------------------------------------------

def example1_system() -> PolynomialSystem:
    """The 2D map (xi, eta) -> (xi (1 + eta + w) / 2, eta / 2), w ~ U[-1, 1]."""
    return PolynomialSystem(
        transition_exprs=("0.5*x1*(1 + x2 + w1)", "0.5*x2"),
        noise=NoiseModel.uniform([1.0]),
    )


@dataclass(frozen=True)
class Example1Instance:
    """Initial condition family x0 = (2^i, 2^i u) with crossing time k* = i."""

    i: int
    u: float = 1.0

    def __post_init__(self):
        if self.i < 1:
            raise ValueError("exponent i must be a positive integer")
        if self.u < 1.0:
            raise ValueError("parameter u must be >= 1")

    @property
    def x0(self):
        return np.array([2.0**self.i, 2.0**self.i * self.u])

    @property
    def k_star(self) -> int:
        return self.i

    @property
    def log2_lower(self) -> float:
        # u^i 2^{i(i+1)/2} in log2
        return self.i * math.log2(self.u) + 0.5 * self.i * (self.i + 1)

    @property
    def log2_upper(self) -> float:
        # u^i 2^{i(i+3)/2} in log2
        return self.i * math.log2(self.u) + 0.5 * self.i * (self.i + 3)


def example1_closed_form(instance: Example1Instance, w_seq):
    """Closed-form (log2 xi_k, eta_k) for k = 0..k*, given the noise values.

    log2 xi_k = i + sum_{n<k} log2((1 + u 2^{i-n} + w_n) / 2) and
    eta_k = u 2^{i-k}.  Valid for w in [-1, 1] and u >= 1, where every
    log argument is positive.
    """
    w = np.asarray(w_seq, dtype=float).reshape(-1)
    if np.any(np.abs(w) > 1.0):
        raise ValueError("noise values must lie in [-1, 1]")
    i, u = instance.i, instance.u
    k_star = instance.k_star
    if w.size < k_star:
        raise ValueError(f"need at least {k_star} noise values")
    ns = np.arange(k_star)
    args = 0.5 * (1.0 + u * 2.0 ** (i - ns) + w[:k_star])
    if np.any(args <= 0.0):
        raise ValueError("non-positive argument in the closed form (requires u >= 1)")
    log2_xi = i + np.concatenate([[0.0], np.cumsum(np.log2(args))])
    eta = u * 2.0 ** (i - np.arange(k_star + 1))
    return log2_xi, eta


def example1_simulate_log2(instance: Example1Instance, w_seq):
    """Iterate the actual map in doubles; log2 xi_k and eta_k for k <= k*.

    Usable while 2^{i(i+3)/2} stays inside double range (i up to ~40).
    """
    system = example1_system()
    w = np.asarray(w_seq, dtype=float).reshape(-1)
    x = instance.x0.copy()
    log2_xi = [math.log2(x[0])]
    eta = [x[1]]
    for k in range(instance.k_star):
        x = np.asarray(system._transition(x, w[k : k + 1]), dtype=float)
        log2_xi.append(math.log2(x[0]))
        eta.append(x[1])
    return np.asarray(log2_xi), np.asarray(eta)


def example1_bounds_hold(instance: Example1Instance, n_sequences: int, seed: int = 0):
    """Check log2 xi_{k*} in [log2_lower, log2_upper] over sampled noise.

    Returns (fraction holding, worst margin).  The margin is the smallest
    distance to either bound (negative means a violation).
    """
    i, u = instance.i, instance.u
    rng = TrajectorySeed(seed, instance.i).rng()
    W = rng.uniform(-1.0, 1.0, size=(n_sequences, i))
    ns = np.arange(i)
    args = 0.5 * (1.0 + u * 2.0 ** (i - ns)[None, :] + W)
    log2_xi = i + np.sum(np.log2(args), axis=1)
    lo, hi = instance.log2_lower, instance.log2_upper
    ok = (log2_xi >= lo - 1e-9) & (log2_xi <= hi + 1e-9)
    margin = float(min(np.min(log2_xi - lo), np.min(hi - log2_xi)))
    return float(ok.mean()), margin


# -- polynomial drift refutation (signed log2-domain arithmetic) ------------

@dataclass(frozen=True)
class PolyCandidate:
    """Polynomial drift candidate V(xi, eta) = sum a_{lj} xi^l eta^j, l+j <= d."""

    degree: int
    coeffs: dict  # {(l, j): a}

    def __post_init__(self):
        for (l, j), a in self.coeffs.items():
            if l < 0 or j < 0 or l + j > self.degree:
                raise ValueError(f"coefficient index ({l},{j}) outside degree {self.degree}")

    @property
    def radially_unbounded(self) -> bool:
        return any(l > 0 and a != 0 for (l, j), a in self.coeffs.items())


def _signed_log2_sum(signs, mags):
    """Sum of terms sign * 2^mag, returned as (sign, log2 magnitude)."""

    def _accumulate(ms):
        if not ms:
            return None
        top = max(ms)
        return top + math.log2(sum(2.0 ** (m - top) for m in ms))

    pos = _accumulate([m for s, m in zip(signs, mags) if s > 0])
    neg = _accumulate([m for s, m in zip(signs, mags) if s < 0])
    if pos is None and neg is None:
        return 0, -math.inf
    if neg is None:
        return 1, pos
    if pos is None:
        return -1, neg
    if abs(pos - neg) < 1e-12:
        return 0, -math.inf
    hi, lo, sign = (pos, neg, 1) if pos > neg else (neg, pos, -1)
    return sign, hi + math.log2(1.0 - 2.0 ** (lo - hi))


def _signed_log2_gt(a, b, slack=1e-9):
    """Strict comparison of (sign, log2mag) pairs: a > b."""
    sa, ma = a
    sb, mb = b
    if sa != sb:
        return sa > sb
    if sa == 0:
        return False
    if sa > 0:
        return ma > mb + slack
    return ma < mb - slack


def refute_polynomial_drift(candidate: PolyCandidate, u: float, i_max: int = 30):
    """Smallest i violating the inequality a polynomial drift must satisfy.

    The inequality compares V at the lower bound of the crossing-time
    state, V(u^i 2^{i(i+1)/2}, u), against V at the initial state,
    V(2^i, 2^i u); a valid drift forces the former to be no larger.  All
    evaluation is in signed log2-magnitude space, so i up to the high
    tens is exact enough despite states near 2^500.  Returns None if no
    violation is found by i_max.
    """
    if not candidate.radially_unbounded:
        raise ValueError(
            "candidate is not radially unbounded in xi: needs some a_{lj} != 0 with l > 0"
        )
    if u < 1.0:
        raise ValueError("u must be >= 1")
    log2_u = math.log2(u)
    items = [((l, j), a) for (l, j), a in candidate.coeffs.items() if a != 0]
    for i in range(1, i_max + 1):
        xi_low = i * log2_u + 0.5 * i * (i + 1)  # log2 of u^i 2^{i(i+1)/2}
        signs, left_mags, right_mags = [], [], []
        for (l, j), a in items:
            signs.append(1 if a > 0 else -1)
            la = math.log2(abs(a))
            left_mags.append(la + l * xi_low + j * log2_u)
            right_mags.append(la + l * i + j * (i + log2_u))
        left = _signed_log2_sum(signs, left_mags)
        right = _signed_log2_sum(signs, right_mags)
        if _signed_log2_gt(left, right):
            return i
    return None


# -- the logarithmic certificate of Example 1 -------------------------------

def _example1_drift(X):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return np.log1p(np.maximum(X[:, 0], 0.0)) + X[:, 1] ** 2


def example1_log_certificate(
    variant_offset: float = 0.5, compact_radius: float = 8.0, delta: float = 0.05
) -> CustomCertificate:
    """V = ln(1 + xi) + eta^2 with U = V - variant_offset on the open quadrant.

    The drift/variant pair usually quoted for this system uses offset 2,
    but {U <= 0} then allows xi up to e^2 - 1 > 1, which spills outside
    the unit-box target, so the sublevel-inclusion check fails at that
    offset.  Any offset below ln 2 (e.g. the default 0.5) keeps
    {U <= 0} inside the box and passes every check; the drift condition
    on V is unaffected by the offset.
    """
    return CustomCertificate(
        drift=_example1_drift,
        variant=lambda X: _example1_drift(X) - variant_offset,
        h=lambda r: r - variant_offset,
        delta=delta,
        compact_radius=compact_radius,
        level_radius=lambda r: math.hypot(math.expm1(r), math.sqrt(max(r, 0.0))),
        levels=(3.0, 4.0, 5.0),
        positive_quadrant=True,
    )


def example1_scan_compact_radius(seed: int = 0, start: float = 2.0, cap: float = 1e6) -> float:
    """Doubling scan for a quadrant radius beyond which the drift is negative."""
    system = example1_system()
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(0xE1,)))
    rho = start
    while rho <= cap:
        angles = rng.uniform(0.0, np.pi / 2.0, size=32)
        pts = rho * np.column_stack([np.cos(angles), np.sin(angles)])
        ok = True
        for i, x in enumerate(pts):
            mean, hw = mc_drift(system, _example1_drift, x, samples=20_000, seed=seed + i)
            if mean + hw > 0.0:
                ok = False
                break
        if ok:
            return rho
        rho *= 2.0
    raise RuntimeError(f"drift scan exceeded the radius cap {cap:g}")


def example1_verify_log_certificate(
    samples: int = 20_000, seed: int = 0, variant_offset: float = 0.5
):
    """Drift and variant reports for the logarithmic certificate above.

    The target region is the open unit box in the positive quadrant.
    With the default offset both reports pass; with offset 2 the drift
    report still passes but the inclusion check fails (see
    example1_log_certificate).
    """
    system = example1_system()
    compact = example1_scan_compact_radius(seed=seed)
    cert = example1_log_certificate(variant_offset=variant_offset, compact_radius=compact)
    plan = ShellPlan(
        radii=tuple(compact * 2.0**j for j in range(5)),
        points_per_shell=32,
        noise_samples=samples,
        seed=seed,
    )
    drift_report = verify_drift(system, cert, plan=plan)

    def in_unit_box(x):
        return 0.0 < x[0] < 1.0 and 0.0 < x[1] < 1.0

    variant_report = verify_variant(
        system, cert, target=in_unit_box, samples=samples, seed=seed
    )
    return drift_report, variant_report


# ---------------------------------------------------------------------------
# Example 2: the random walk and its quadratic failure
# ---------------------------------------------------------------------------

def random_walk_system(half_width: float = 1.0) -> LinearSystem:
    """x_{k+1} = x_k + w_k with w ~ U[-half_width, half_width]."""
    return LinearSystem(A=[[1.0]], B=[[1.0]], noise=NoiseModel.uniform([half_width]))


def quadratic_drift_on_random_walk(a: float, b: float = 0.0, c: float = 0.0) -> float:
    """Exact expected increment of V(x) = a x^2 + b x + c on the random walk.

    Independent of x: the linear terms vanish (E[w] = 0) and the constant
    cancels, leaving a * E[w^2] = a / 3.
    """
    return a * (1.0 / 3.0)


def abs_certificate(delta: float = 0.5) -> CustomCertificate:
    """V(x) = |x|, U(x) = |x| - 1, compact set [-1, 1], H(r) = r - 1."""
    return CustomCertificate(
        drift=lambda X: np.abs(np.atleast_2d(X)[:, 0]),
        variant=lambda X: np.abs(np.atleast_2d(X)[:, 0]) - 1.0,
        h=lambda r: r - 1.0,
        delta=delta,
        compact_radius=1.0,
        level_radius=lambda r: r,
        levels=(3.0, 10.0, 100.0),
    )


def example2_quadratic_failure(
    a_grid=(0.5, 1.0, 2.0, 5.0),
    bc_grid=((0.0, 0.0), (-5.0, 7.0), (3.0, -1.0)),
    delta: float = 0.5,
    samples: int = 100_000,
    seed: int = 0,
) -> dict:
    """Quadratics fail V1 on the random walk; |x| passes V1 and V2.

    Returns a report with the constant positive increment a/3 of each
    quadratic candidate, plus drift/variant reports for the |x|
    certificate with the exact decrease probability (1 - delta) / 2.
    """
    system = random_walk_system()
    quad_rows = []
    for a in a_grid:
        for b, c in bc_grid:
            quad_rows.append(
                {"a": a, "b": b, "c": c, "delta_v": quadratic_drift_on_random_walk(a, b, c)}
            )

    cert = abs_certificate(delta=delta)
    plan = ShellPlan(radii=(2.0, 10.0, 100.0), points_per_shell=8, noise_samples=10_000, seed=seed)
    drift_report = verify_drift(system, cert, plan=plan)
    target = TargetBall(center=[0.0], radius=2.0)
    variant_report = verify_variant(system, cert, target=target, samples=samples, seed=seed)
    return {
        "quadratics": quad_rows,
        "expected_epsilon": (1.0 - delta) / 2.0,
        "abs_drift": drift_report,
        "abs_variant": variant_report,
    }
