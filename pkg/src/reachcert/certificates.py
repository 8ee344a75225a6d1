"""Explicit drift/variant certificate constructions for linear systems.

Three templates are produced, matching the three reachable regimes:

* quadratic ``V(x) = x'Qx`` with Q from the discrete Lyapunov equation,
  for spectral radius < 1;
* logarithmic ``V(x) = sqrt(ln ||x||_*)`` in a norm preserved by A, for
  fully critical systems of dimension <= 2;
* an additive composite (logarithmic on the unit-circle invariant
  subspace plus quadratic on the stable complement) for critical systems
  with a mixed spectrum.  The composite is a candidate only: it carries a
  ``verified`` flag that stays False until the numerical verifier passes it.

All constants (compact radii, sublevel bound b, decrease delta, the
contraction factor r0) are materialized so every certificate can be
re-checked independently.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from .linalg import LinalgError, solve_discrete_lyapunov
from .spectral import analyze, unit_plane_basis
from .systems import LinearSystem, TargetBall
from .verify import mc_drift

__all__ = [
    "QuadraticCertificate",
    "LogCertificate",
    "CompositeCertificate",
    "CustomCertificate",
    "synthesize_quadratic",
    "synthesize_logarithmic",
    "synthesize_composite",
    "SynthesisError",
    "certificate_to_dict",
    "certificate_from_dict",
    "load_certificate",
    "save_certificate",
    "DOMAIN_THRESHOLD",
]

DOMAIN_THRESHOLD = math.e  # sqrt(ln .) evaluated only where ln >= 1
SCAN_RADIUS_CAP = 1e9
SCAN_MARGIN_SCALE = 1e-6


class SynthesisError(RuntimeError):
    """Certificate construction failed (precondition or scan failure)."""


def _require_origin_ball(target: TargetBall):
    if np.any(target.center != 0.0):
        raise SynthesisError("certificate synthesis requires an origin-centered target ball")


def _sublevel_b(Q, target: TargetBall) -> float:
    """Largest b with {x'Qx <= 2b} inside the origin-centered target ball."""
    _require_origin_ball(target)
    R = target.radius
    if target.weight is None:
        lam_min = float(np.linalg.eigvalsh(Q).min())
        return 0.5 * lam_min * R * R
    # Need max x'Wx over {x'Qx <= 2b} below R^2.
    lam_max = float(scipy.linalg.eigh(target.weight, Q, eigvals_only=True).max())
    return 0.5 * R * R / lam_max


# ---------------------------------------------------------------------------
# Quadratic certificates (stable spectrum)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadraticCertificate:
    """V(x) = x'Qx, U(x) = x'Qx - b, compact set {x'x <= compact_radius_sq}."""

    Q: np.ndarray
    alpha: float
    compact_radius_sq: float
    r0: float
    variant_b: float
    delta: float
    noise_set_bound: float

    kind = "quadratic"

    @property
    def compact_radius(self) -> float:
        return math.sqrt(max(self.compact_radius_sq, 0.0))

    def drift_values(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.einsum("ij,jk,ik->i", X, self.Q, X)

    def variant_values(self, X) -> np.ndarray:
        return self.drift_values(X) - self.variant_b

    def h_bound(self, r: float) -> float:
        return r - self.variant_b

    def level_bound(self, r: float) -> float:
        lam_min = float(np.linalg.eigvalsh(self.Q).min())
        return math.sqrt(max(r, 0.0) / lam_min)

    def default_levels(self):
        return (2.0 * self.variant_b, 4.0 * self.variant_b, 8.0 * self.variant_b)


def synthesize_quadratic(system: LinearSystem, target: TargetBall) -> QuadraticCertificate:
    """Quadratic certificate for rho(A) < 1.

    Q solves A'QA = Q - I; the compact set radius^2 is
    tr(B'QB Sigma_w) / alpha with alpha = 1; b is the largest value
    keeping {x'Qx < 2b} inside the target; r0 = lambda_max(Q^{-1}A'QA);
    delta = (1 - r0) b.
    """
    try:
        Q = solve_discrete_lyapunov(system.A)
    except LinalgError as exc:
        raise SynthesisError(f"Lyapunov solve failed: {exc}") from exc
    A, B = system.A, system.B
    alpha = 1.0
    compact_radius_sq = float(np.trace(B.T @ Q @ B @ system.noise.covariance)) / alpha
    r0 = float(scipy.linalg.eigh(A.T @ Q @ A, Q, eigvals_only=True).max())
    r0 = min(max(r0, 0.0), 1.0)
    b = _sublevel_b(Q, target)
    if b <= 0:
        raise SynthesisError("target too small: sublevel bound b is non-positive")
    delta = (1.0 - r0) * b
    # ||B||_Q^2: worst-case Q-norm gain of B (Euclidean norm on the noise
    # side unless n == m, where the Q-weighted norm applies as well).
    if B.shape[0] == B.shape[1]:
        gain = float(scipy.linalg.eigh(B.T @ Q @ B, Q, eigvals_only=True).max())
    else:
        gain = float(np.linalg.eigvalsh(B.T @ Q @ B).max())
    noise_set_bound = delta / gain if gain > 0 else math.inf
    return QuadraticCertificate(
        Q=Q,
        alpha=alpha,
        compact_radius_sq=compact_radius_sq,
        r0=r0,
        variant_b=b,
        delta=delta,
        noise_set_bound=noise_set_bound,
    )


# ---------------------------------------------------------------------------
# Logarithmic certificates (fully critical, dimension <= 2)
# ---------------------------------------------------------------------------

def _log_drift_values(X, Q_star) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    sq = np.einsum("ij,jk,ik->i", X, Q_star, X)
    return np.sqrt(np.maximum(0.5 * np.log(np.maximum(sq, 1e-300)), 1.0))


@dataclass(frozen=True)
class LogCertificate:
    """V(x) = sqrt(ln ||x||_*), U(x) = ||x||_*^2 - b, H(r) = exp(2 r^2) - b.

    ||x||_* is the Q_star-weighted norm preserved by A.  V is clamped to
    its value at ||x||_* = e, so it is defined everywhere; the clamp
    region lies inside the compact set.
    """

    Q_star: np.ndarray
    compact_radius_star: float
    variant_b: float
    delta: float
    epsilon: float
    domain_threshold: float = DOMAIN_THRESHOLD

    kind = "logarithmic"

    def _lam_min(self) -> float:
        return float(np.linalg.eigvalsh(self.Q_star).min())

    @property
    def compact_radius(self) -> float:
        # Euclidean radius covering {||x||_* <= compact_radius_star}
        return self.compact_radius_star / math.sqrt(self._lam_min())

    def star_norms(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.sqrt(np.maximum(np.einsum("ij,jk,ik->i", X, self.Q_star, X), 0.0))

    def drift_values(self, X) -> np.ndarray:
        return _log_drift_values(X, self.Q_star)

    def variant_values(self, X) -> np.ndarray:
        return self.star_norms(X) ** 2 - self.variant_b

    def h_bound(self, r: float) -> float:
        return math.exp(2.0 * r * r) - self.variant_b

    def level_bound(self, r: float) -> float:
        return math.exp(r * r) / math.sqrt(self._lam_min())

    def default_levels(self):
        base = max(math.sqrt(math.log(max(self.compact_radius_star, math.e))), 1.0)
        return (base + 0.5, base + 1.0, base + 1.5)


def _second_order_log_drift(system: LinearSystem, Q_star, X) -> np.ndarray:
    """Closed-form second-order Taylor estimate of the log-drift at rows of X.

    0.5 * E[w' H w] with H the Hessian of sqrt(ln ||Ax + Bw||_*) at w = 0.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    A, B = system.A, system.B
    Q = Q_star
    S = B @ system.noise.covariance @ B.T
    T1 = float(np.trace(Q @ S))
    Z = X @ A.T
    QZ = Z @ Q
    T2 = np.einsum("ij,jk,ik->i", QZ, S, QZ)
    r_sq = np.einsum("ij,jk,ik->i", X, Q, X)
    ln_r = 0.5 * np.log(r_sq)
    first = (0.5 * T1 - T2 / r_sq) / (r_sq * np.sqrt(ln_r))
    second = -T2 / (4.0 * r_sq**2 * ln_r**1.5)
    return 0.5 * (first + second)


def _scan_compact_radius(system: LinearSystem, Q_star, seed: int, radius_cap: float) -> float:
    """Outward doubling scan for a radius beyond which the log-drift is negative.

    At each candidate star-radius, the second-order closed-form estimate
    must be below -margin on a sampled shell, and an antithetic Monte
    Carlo estimate must confirm a non-positive drift at a few points.
    """
    n = system.dimension
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(0x10C5,)))
    rho = DOMAIN_THRESHOLD
    while rho <= radius_cap:
        # Points with ||x||_* = rho.
        z = rng.standard_normal(size=(max(16 * n, 16), n))
        norms = np.sqrt(np.einsum("ij,jk,ik->i", z, Q_star, z))
        pts = rho * z / norms[:, None]
        margin = SCAN_MARGIN_SCALE * math.sqrt(math.log(rho))
        d2 = _second_order_log_drift(system, Q_star, pts)
        if np.all(d2 <= -margin):
            ok = True
            for i in range(min(4, len(pts))):
                mean, hw = mc_drift(
                    system,
                    lambda X: _log_drift_values(X, Q_star),
                    pts[i],
                    samples=20_000,
                    seed=seed + i,
                )
                if mean + hw > 0.0:
                    ok = False
                    break
            if ok:
                return rho
        rho *= 2.0
    raise SynthesisError(
        f"log-drift scan exceeded the radius cap {radius_cap:g}; no compact set certified"
    )


def _estimate_delta_epsilon(system: LinearSystem, certificate, b: float, seed: int, samples=20_000):
    """Monte Carlo estimate of the variant decrease (delta, epsilon) near U = 0."""
    n = system.dimension
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(0xDE17A,)))
    z = rng.standard_normal(size=(samples, n))
    u_vals = np.asarray(certificate.variant_values(z))
    # Scale points onto the shell where U = b (i.e. just outside {U <= 0}).
    scale = np.sqrt(2.0 * b / np.maximum(u_vals + b, 1e-300))
    pts = z * scale[:, None]
    from .verify import _noise_matrix  # shared seeded noise sampling
    from .systems import step_batch

    W = _noise_matrix(system, rng, samples)
    succ = step_batch(system, pts, W)
    dU = np.asarray(certificate.variant_values(succ)) - np.asarray(certificate.variant_values(pts))
    neg = -dU[dU < 0.0]
    if neg.size == 0:
        raise SynthesisError("variant never decreases at the sampled boundary shell")
    delta = float(np.quantile(neg, 0.5))
    epsilon = float(np.mean(dU <= -delta))
    return delta, epsilon


def synthesize_logarithmic(
    system: LinearSystem,
    target: TargetBall,
    seed: int = 0,
    radius_cap: float = SCAN_RADIUS_CAP,
) -> LogCertificate:
    """Logarithmic certificate for a fully critical system of dimension <= 2.

    Preconditions: all eigenvalues of A on the unit circle with Jordan
    blocks of size one, n <= 2, B full rank with n == m.
    """
    n = system.dimension
    if n > 2:
        raise SynthesisError("logarithmic certificate requires dimension <= 2")
    report = analyze(system.A)
    if report.dim_EA != n or report.d_max_unit > 1:
        raise SynthesisError(
            "logarithmic certificate requires all eigenvalues on the unit circle "
            "with Jordan blocks of size one"
        )
    try:
        basis = unit_plane_basis(system.A)
    except LinalgError as exc:
        raise SynthesisError(str(exc)) from exc
    Q_star = basis.Q_star
    b = _sublevel_b(Q_star, target)
    if b <= 0:
        raise SynthesisError("target too small: sublevel bound b is non-positive")
    compact = _scan_compact_radius(system, Q_star, seed, radius_cap)
    cert = LogCertificate(
        Q_star=Q_star,
        compact_radius_star=compact,
        variant_b=b,
        delta=1.0,  # placeholder until estimated
        epsilon=0.0,
    )
    delta, epsilon = _estimate_delta_epsilon(system, cert, b, seed)
    return replace(cert, delta=delta, epsilon=epsilon)


# ---------------------------------------------------------------------------
# Composite certificates (critical unit part + stable part)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CompositeCertificate:
    """Additive candidate V(x) = V_log(x_u) + V_quad(x_s) on split coordinates.

    The state is mapped by transform_inv into (unit part, stable part)
    coordinates.  The combined variant is the quadratic form
    x' M x - b with M assembled from the two parts.  This construction is
    a heuristic beyond the proved regimes; ``verified`` stays False until
    the numerical drift and variant checks pass.
    """

    transform: np.ndarray       # columns: unit basis then stable basis
    transform_inv: np.ndarray
    unit_dim: int
    unit_cert: LogCertificate
    stable_cert: QuadraticCertificate
    M: np.ndarray               # combined variant quadratic form (in x coordinates)
    variant_b: float
    delta: float
    verified: bool = False

    kind = "composite"

    def _split(self, X):
        Y = np.atleast_2d(np.asarray(X, dtype=float)) @ self.transform_inv.T
        return Y[:, : self.unit_dim], Y[:, self.unit_dim :]

    def drift_values(self, X) -> np.ndarray:
        Xu, Xs = self._split(X)
        return self.unit_cert.drift_values(Xu) + self.stable_cert.drift_values(Xs)

    def variant_values(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.einsum("ij,jk,ik->i", X, self.M, X) - self.variant_b

    def h_bound(self, r: float) -> float:
        return math.exp(2.0 * r * r) + r - self.variant_b

    def level_bound(self, r: float) -> float:
        bu = self.unit_cert.level_bound(r)
        bs = self.stable_cert.level_bound(r)
        return float(np.linalg.norm(self.transform, 2)) * math.hypot(bu, bs)

    @property
    def compact_radius(self) -> float:
        ru = self.unit_cert.compact_radius
        rs = self.stable_cert.compact_radius
        return float(np.linalg.norm(self.transform, 2)) * math.hypot(ru, rs)

    def default_levels(self):
        base = self.unit_cert.default_levels()
        return tuple(r + float(self.stable_cert.variant_b) for r in base)


def _invariant_split(A, unit_tol=1e-9):
    """Real bases for the unit-circle invariant subspace and its complement."""
    eigvals, eigvecs = np.linalg.eig(A)
    unit_cols, stable_cols = [], []
    skip = set()
    for i, lam in enumerate(eigvals):
        if i in skip:
            continue
        cols = unit_cols if abs(abs(lam) - 1.0) <= max(unit_tol, 1e-7) else stable_cols
        v = eigvecs[:, i]
        if abs(lam.imag) > 1e-12:
            # Use one member of each conjugate pair; its real and
            # imaginary parts span the corresponding real plane.
            j = int(np.argmin(np.abs(eigvals - np.conj(lam))))
            skip.add(j)
            cols.append(v.real)
            cols.append(v.imag)
        else:
            cols.append(v.real)
    if not unit_cols or not stable_cols:
        raise SynthesisError("composite split needs both a unit part and a stable part")
    T = np.column_stack(unit_cols + stable_cols)
    if np.linalg.cond(T) > 1e10:
        raise SynthesisError("invariant subspace split is ill-conditioned")
    return T, len(unit_cols)


def synthesize_composite(
    system: LinearSystem, target: TargetBall, seed: int = 0
) -> CompositeCertificate:
    """Composite certificate for a critical system with a stable part."""
    _require_origin_ball(target)
    A, B = system.A, system.B
    T, nu = _invariant_split(A)
    if nu > 2:
        raise SynthesisError("unit-circle subspace has dimension > 2; no certificate template")
    T_inv = np.linalg.inv(T)
    Ab = T_inv @ A @ T
    A_u, A_s = Ab[:nu, :nu], Ab[nu:, nu:]
    B_y = T_inv @ B
    B_u, B_s = B_y[:nu, :], B_y[nu:, :]

    sub_target = TargetBall(center=np.zeros(nu), radius=target.radius)
    unit_cert = synthesize_logarithmic(
        LinearSystem(A=A_u, B=B_u, noise=system.noise), sub_target, seed=seed
    )
    stable_target = TargetBall(center=np.zeros(A_s.shape[0]), radius=target.radius)
    stable_cert = synthesize_quadratic(
        LinearSystem(A=A_s, B=B_s, noise=system.noise), stable_target
    )

    # Combined variant form in original coordinates.
    blocks = scipy.linalg.block_diag(unit_cert.Q_star, stable_cert.Q)
    M = T_inv.T @ blocks @ T_inv
    M = 0.5 * (M + M.T)
    b = _sublevel_b(M, target)
    if b <= 0:
        raise SynthesisError("target too small for the combined variant")
    cert = CompositeCertificate(
        transform=T,
        transform_inv=T_inv,
        unit_dim=nu,
        unit_cert=unit_cert,
        stable_cert=stable_cert,
        M=M,
        variant_b=b,
        delta=1.0,
        verified=False,
    )
    delta, _ = _estimate_delta_epsilon(system, cert, b, seed)
    return replace(cert, delta=delta)


# ---------------------------------------------------------------------------
# User-supplied certificates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CustomCertificate:
    """Hand-written certificate: callables plus the constants the checks need.

    ``drift`` and ``variant`` take an (N, n) array of states and return N
    values.  ``level_radius`` maps a drift level r to a Euclidean radius
    bounding {V <= r}.
    """

    drift: object
    variant: object
    h: object
    delta: float
    compact_radius: float
    level_radius: object
    levels: tuple = ()
    positive_quadrant: bool = False

    kind = "custom"

    def drift_values(self, X):
        return np.asarray(self.drift(np.atleast_2d(np.asarray(X, dtype=float))))

    def variant_values(self, X):
        return np.asarray(self.variant(np.atleast_2d(np.asarray(X, dtype=float))))

    def h_bound(self, r: float) -> float:
        return float(self.h(r))

    def level_bound(self, r: float) -> float:
        return float(self.level_radius(r))

    def default_levels(self):
        if self.levels:
            return self.levels
        base = self.compact_radius + 1.0
        return (base, 2.0 * base, 4.0 * base)


# ---------------------------------------------------------------------------
# Serialization (certificate files)
# ---------------------------------------------------------------------------

def certificate_to_dict(cert) -> dict:
    if isinstance(cert, QuadraticCertificate):
        return {
            "kind": "quadratic",
            "Q": cert.Q.tolist(),
            "alpha": cert.alpha,
            "compact_radius_sq": cert.compact_radius_sq,
            "r0": cert.r0,
            "b": cert.variant_b,
            "delta": cert.delta,
            "noise_set_bound": cert.noise_set_bound,
        }
    if isinstance(cert, LogCertificate):
        return {
            "kind": "logarithmic",
            "Q_star": cert.Q_star.tolist(),
            "domain_threshold": cert.domain_threshold,
            "compact_radius_star": cert.compact_radius_star,
            "b": cert.variant_b,
            "delta": cert.delta,
            "epsilon": cert.epsilon,
        }
    if isinstance(cert, CompositeCertificate):
        return {
            "kind": "composite",
            "transform": cert.transform.tolist(),
            "unit_dim": cert.unit_dim,
            "unit": certificate_to_dict(cert.unit_cert),
            "stable": certificate_to_dict(cert.stable_cert),
            "M": cert.M.tolist(),
            "b": cert.variant_b,
            "delta": cert.delta,
            "verified": cert.verified,
        }
    raise TypeError(f"cannot serialize certificate of type {type(cert).__name__}")


def certificate_from_dict(d: dict):
    kind = d.get("kind")
    if kind == "quadratic":
        Q = np.asarray(d["Q"], dtype=float)
        from .linalg import is_symmetric_positive_definite

        if not is_symmetric_positive_definite(Q):
            raise ValueError("certificate Q is not symmetric positive definite")
        return QuadraticCertificate(
            Q=Q,
            alpha=float(d.get("alpha", 1.0)),
            compact_radius_sq=float(d["compact_radius_sq"]),
            r0=float(d["r0"]),
            variant_b=float(d["b"]),
            delta=float(d["delta"]),
            noise_set_bound=float(d.get("noise_set_bound", 0.0)),
        )
    if kind == "logarithmic":
        from .linalg import is_symmetric_positive_definite

        Q_star = np.asarray(d["Q_star"], dtype=float)
        if not is_symmetric_positive_definite(Q_star):
            raise ValueError("certificate Q_star is not symmetric positive definite")
        return LogCertificate(
            Q_star=Q_star,
            compact_radius_star=float(d["compact_radius_star"]),
            variant_b=float(d["b"]),
            delta=float(d["delta"]),
            epsilon=float(d.get("epsilon", 0.0)),
            domain_threshold=float(d.get("domain_threshold", DOMAIN_THRESHOLD)),
        )
    if kind == "composite":
        T = np.asarray(d["transform"], dtype=float)
        M = np.asarray(d["M"], dtype=float)
        return CompositeCertificate(
            transform=T,
            transform_inv=np.linalg.inv(T),
            unit_dim=int(d["unit_dim"]),
            unit_cert=certificate_from_dict(d["unit"]),
            stable_cert=certificate_from_dict(d["stable"]),
            M=0.5 * (M + M.T),
            variant_b=float(d["b"]),
            delta=float(d["delta"]),
            verified=bool(d.get("verified", False)),
        )
    raise ValueError(f"unknown certificate kind {kind!r}")


def save_certificate(cert, path):
    with open(path, "w") as fh:
        json.dump(certificate_to_dict(cert), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_certificate(path):
    with open(path) as fh:
        return certificate_from_dict(json.load(fh))
