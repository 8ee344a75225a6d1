"""Reachability classification of linear systems with additive noise.

The decision tree branches on the spectral radius, the Jordan structure
on the unit circle, the dimension of the unit-circle invariant subspace,
and the noise excitation (B full rank, square, finite third moments):

* rho < 1: reachable, quadratic certificate.
* rho > 1: not reachable (divergence with positive probability).
* rho = 1 with a Jordan block of size >= 2 on the unit circle: not
  reachable (polynomial state growth).
* rho = 1, diagonalizable unit part, full excitation: reachable iff the
  unit-circle invariant subspace has real dimension <= 2 (logarithmic or
  composite certificate); not reachable for dimension > 2.
* degenerate excitation at criticality: no verdict is claimed
  (Inconclusive) - failure is possible but not guaranteed in general.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .linalg import DEFAULT_RANK_TOL, numerical_rank
from .spectral import DEFAULT_UNIT_TOL, SpectralReport, analyze
from .systems import LinearSystem, TargetBall

__all__ = ["Outcome", "Verdict", "classify"]


class Outcome:
    REACHABLE_STABLE = "ReachableStable"
    REACHABLE_CRITICAL = "ReachableCritical"
    NOT_REACHABLE_UNSTABLE = "NotReachableUnstable"
    NOT_REACHABLE_JORDAN = "NotReachableJordan"
    NOT_REACHABLE_DIMENSION = "NotReachableDimension"
    INCONCLUSIVE_ASSUMPTION = "InconclusiveAssumption"


@dataclass(frozen=True)
class Verdict:
    outcome: str
    certificate_advice: str  # quadratic | logarithmic | composite | none
    branch_trace: tuple      # ordered (test, value, decision) triples
    spectral: SpectralReport
    warnings: tuple = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome,
            "certificate_advice": self.certificate_advice,
            "branch_trace": [
                {"test": t, "value": v, "decision": d} for (t, v, d) in self.branch_trace
            ],
            "spectral": self.spectral.to_dict(),
            "warnings": list(self.warnings),
        }


def classify(
    system: LinearSystem,
    target: TargetBall,
    unit_tol: float = DEFAULT_UNIT_TOL,
    rank_tol: float = DEFAULT_RANK_TOL,
) -> Verdict:
    """Map (A, B, noise, target) to a reachability verdict with its trace."""
    if target.dimension != system.dimension:
        raise ValueError("target dimension does not match the system")
    if not target.contains_origin():
        raise ValueError("the target set must contain the origin")

    report = analyze(system.A, unit_tol=unit_tol, rank_tol=rank_tol)
    trace = []
    warnings = []
    if report.ambiguous_clustering:
        warnings.append("eigenvalue clusters closer than 10x the clustering tolerance")

    rho = report.rho
    if rho < 1.0 - unit_tol:
        trace.append(("spectral_radius", rho, f"< 1 - {unit_tol:g}: stable"))
        return Verdict(
            outcome=Outcome.REACHABLE_STABLE,
            certificate_advice="quadratic",
            branch_trace=tuple(trace),
            spectral=report,
            warnings=tuple(warnings),
        )
    if rho > 1.0 + unit_tol:
        trace.append(("spectral_radius", rho, f"> 1 + {unit_tol:g}: unstable"))
        return Verdict(
            outcome=Outcome.NOT_REACHABLE_UNSTABLE,
            certificate_advice="none",
            branch_trace=tuple(trace),
            spectral=report,
            warnings=tuple(warnings),
        )

    trace.append(("spectral_radius", rho, "within the critical band around 1"))
    if abs(rho - 1.0) > 0.1 * unit_tol:
        warnings.append("near-critical: spectral radius within tolerance of 1 but not exactly 1")

    if report.d_max_unit >= 2:
        trace.append(("largest_unit_jordan_block", report.d_max_unit, ">= 2: polynomial growth"))
        return Verdict(
            outcome=Outcome.NOT_REACHABLE_JORDAN,
            certificate_advice="none",
            branch_trace=tuple(trace),
            spectral=report,
            warnings=tuple(warnings),
        )
    trace.append(("largest_unit_jordan_block", report.d_max_unit, "diagonalizable unit part"))

    n, m = system.dimension, system.noise_dimension
    b_rank = numerical_rank(system.B, rank_tol)
    full_excitation = (n == m) and (b_rank == n)
    trace.append(
        (
            "excitation",
            {"n": n, "m": m, "rank_B": b_rank},
            "full rank, square" if full_excitation else "degenerate (Assumption fails)",
        )
    )
    if not full_excitation:
        return Verdict(
            outcome=Outcome.INCONCLUSIVE_ASSUMPTION,
            certificate_advice="none",
            branch_trace=tuple(trace),
            spectral=report,
            warnings=tuple(warnings),
        )

    if report.dim_EA <= 2:
        has_stable_part = report.stable_part_rho > 0.0 or report.dim_EA < n
        advice = "composite" if has_stable_part else "logarithmic"
        trace.append(("dim_unit_subspace", report.dim_EA, "<= 2: critical recurrence"))
        if advice == "composite":
            warnings.append("composite certificate is a candidate only; verify numerically")
        return Verdict(
            outcome=Outcome.REACHABLE_CRITICAL,
            certificate_advice=advice,
            branch_trace=tuple(trace),
            spectral=report,
            warnings=tuple(warnings),
        )

    trace.append(("dim_unit_subspace", report.dim_EA, "> 2: transience"))
    return Verdict(
        outcome=Outcome.NOT_REACHABLE_DIMENSION,
        certificate_advice="none",
        branch_trace=tuple(trace),
        spectral=report,
        warnings=tuple(warnings),
    )
