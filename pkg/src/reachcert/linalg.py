"""Dense real-matrix primitives used throughout the toolkit.

Eigenvalue clustering, spectral radius, a direct discrete Lyapunov solver,
SVD-based numerical rank, and weighted norms.  Everything targets small
dense matrices (desk scale, n up to a few dozen).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "LinalgError",
    "ComplexSpectrum",
    "eigen_decompose",
    "spectral_radius",
    "solve_discrete_lyapunov",
    "numerical_rank",
    "weighted_norm",
    "is_symmetric_positive_definite",
]

DEFAULT_CLUSTER_TOL = 1e-8
DEFAULT_RANK_TOL = 1e-10
LYAPUNOV_RESIDUAL_TOL = 1e-9


class LinalgError(ValueError):
    """Raised for invalid inputs or failed numerical guarantees."""


def _as_matrix(M, name="matrix"):
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M.reshape(1, -1) if M.size > 1 else M.reshape(1, 1)
    if M.ndim != 2:
        raise LinalgError(f"{name} must be 2-dimensional, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise LinalgError(f"{name} has non-finite entries")
    return M


def _as_square(M, name="matrix"):
    M = _as_matrix(M, name)
    if M.shape[0] != M.shape[1]:
        raise LinalgError(f"{name} must be square, got shape {M.shape}")
    return M


@dataclass(frozen=True)
class ComplexSpectrum:
    """Clustered eigenvalues of a real matrix.

    ``eigenvalues[i]`` is the cluster representative and
    ``multiplicities[i]`` the number of raw eigenvalues merged into it.
    Non-real clusters come in conjugate pairs with equal multiplicity.
    """

    eigenvalues: tuple = field(default_factory=tuple)
    multiplicities: tuple = field(default_factory=tuple)

    @property
    def dimension(self) -> int:
        return int(sum(self.multiplicities))

    def moduli(self):
        return np.abs(np.asarray(self.eigenvalues))


def _cluster(values, tol):
    """Greedy transitive clustering of complex values within distance tol."""
    order = np.lexsort((values.imag, values.real))
    values = values[order]
    groups = []
    for v in values:
        for g in groups:
            if any(abs(v - u) <= tol for u in g):
                g.append(v)
                break
        else:
            groups.append([v])
    return groups


def eigen_decompose(M, cluster_tol: float = DEFAULT_CLUSTER_TOL) -> ComplexSpectrum:
    """Eigenvalues of a square real matrix, merged into clusters.

    Raw eigenvalues within ``cluster_tol`` of each other (transitively)
    are merged; the cluster value is their mean.  Conjugate symmetry is
    restored exactly: clusters with a small imaginary part are snapped to
    the real axis, and non-real clusters are paired with their conjugates.
    """
    if cluster_tol <= 0:
        raise LinalgError("cluster_tol must be positive")
    M = _as_square(M)
    try:
        raw = np.linalg.eigvals(M)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise LinalgError(f"eigenvalue iteration failed: {exc}") from exc

    groups = _cluster(raw, cluster_tol)
    eigs, mults = [], []
    for g in groups:
        val = np.mean(g)
        if abs(val.imag) <= cluster_tol:
            val = complex(val.real, 0.0)
        eigs.append(val)
        mults.append(len(g))

    # Pair non-real clusters with their conjugates and force exact symmetry.
    eigs = np.asarray(eigs, dtype=complex)
    used = np.zeros(len(eigs), dtype=bool)
    for i in range(len(eigs)):
        if used[i] or eigs[i].imag == 0.0:
            continue
        partners = [
            j
            for j in range(len(eigs))
            if not used[j] and j != i and abs(eigs[j] - np.conj(eigs[i])) <= 2 * cluster_tol
        ]
        if partners:
            j = min(partners, key=lambda j: abs(eigs[j] - np.conj(eigs[i])))
            mean = 0.5 * (eigs[i] + np.conj(eigs[j]))
            eigs[i], eigs[j] = mean, np.conj(mean)
            used[i] = used[j] = True

    order = np.lexsort((np.asarray(eigs).imag, np.asarray(eigs).real))
    eigs = [complex(eigs[k]) for k in order]
    mults = [int(mults[k]) for k in order]
    return ComplexSpectrum(tuple(eigs), tuple(mults))


def spectral_radius(M) -> float:
    """Maximum eigenvalue modulus of a square matrix."""
    spectrum = eigen_decompose(M)
    if not spectrum.eigenvalues:
        return 0.0
    return float(spectrum.moduli().max())


def solve_discrete_lyapunov(A, residual_tol: float = LYAPUNOV_RESIDUAL_TOL):
    """Solve ``A' Q A = Q - I`` for symmetric positive definite Q.

    Requires ``spectral_radius(A) < 1``.  The equation is vectorized into
    an n^2-dimensional linear system and solved directly; the result is
    symmetrized.  Raises LinalgError if the spectral radius precondition
    fails, if Q is not positive definite, or if the residual
    ``||A'QA - Q + I||_F`` exceeds ``residual_tol * (1 + ||Q||_F)``.
    """
    A = _as_square(A, "A")
    n = A.shape[0]
    rho = spectral_radius(A)
    if rho >= 1.0 - 1e-12:
        raise LinalgError(f"spectral radius {rho:.6g} >= 1; Lyapunov equation has no PD solution")

    # vec(Q - A'QA) = (I - A' (x) A') vec(Q) = vec(I)
    lhs = np.eye(n * n) - np.kron(A.T, A.T)
    try:
        q = np.linalg.solve(lhs, np.eye(n).reshape(-1))
    except np.linalg.LinAlgError as exc:
        raise LinalgError(f"Lyapunov system singular (rho={rho:.6g}): {exc}") from exc
    Q = q.reshape(n, n)
    Q = 0.5 * (Q + Q.T)

    residual = np.linalg.norm(A.T @ Q @ A - Q + np.eye(n), "fro")
    if residual > residual_tol * (1.0 + np.linalg.norm(Q, "fro")):
        raise LinalgError(
            f"Lyapunov residual {residual:.3e} exceeds tolerance; "
            f"equation ill-conditioned (rho={rho:.6g})"
        )
    if not is_symmetric_positive_definite(Q):
        raise LinalgError(f"Lyapunov solution not positive definite (rho={rho:.6g})")
    return Q


def numerical_rank(M, rank_tol: float = DEFAULT_RANK_TOL) -> int:
    """Count of singular values above ``rank_tol`` times the largest one.

    The zero matrix has rank 0.  Accepts real or complex input.
    """
    if rank_tol <= 0:
        raise LinalgError("rank_tol must be positive")
    M = np.atleast_2d(np.asarray(M))
    if not np.all(np.isfinite(M)):
        raise LinalgError("matrix has non-finite entries")
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rank_tol * s[0]))


def weighted_norm(x, Q) -> float:
    """Weighted vector norm sqrt(x' Q x) for symmetric PD Q."""
    x = np.asarray(x, dtype=float).reshape(-1)
    Q = _as_square(Q, "Q")
    if Q.shape[0] != x.size:
        raise LinalgError(f"dimension mismatch: x has {x.size} entries, Q is {Q.shape[0]}x{Q.shape[0]}")
    val = float(x @ Q @ x)
    return float(np.sqrt(max(val, 0.0)))


def is_symmetric_positive_definite(Q, sym_tol: float = 1e-10) -> bool:
    """Check symmetry (relative Frobenius) and positive definiteness."""
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
        return False
    if not np.all(np.isfinite(Q)):
        return False
    if np.linalg.norm(Q - Q.T, "fro") > sym_tol * (1.0 + np.linalg.norm(Q, "fro")):
        return False
    try:
        np.linalg.cholesky(0.5 * (Q + Q.T))
    except np.linalg.LinAlgError:
        return False
    return True
