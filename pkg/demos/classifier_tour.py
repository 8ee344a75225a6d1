"""Tour of the reachability decision tree on nine representative systems.

Each system exercises one branch: stable spectrum, unstable spectrum,
defective unit eigenvalue, too many critical directions, fully critical
1D/2D recurrence, mixed spectrum, and degenerate noise excitation.
"""

import numpy as np

from reachcert import LinearSystem, NoiseModel, TargetBall, classify


def uniform_system(A, B=None):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if B is None:
        B = np.eye(A.shape[0])
    B = np.atleast_2d(np.asarray(B, dtype=float))
    return LinearSystem(A=A, B=B, noise=NoiseModel.uniform([1.0] * B.shape[1]))


def main():
    theta = np.pi / 4
    rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    rng = np.random.default_rng(2024)
    A_rand = rng.standard_normal((3, 3))
    A_rand *= 0.9 / max(abs(np.linalg.eigvals(A_rand)))

    systems = [
        ("random stable (rho = 0.9)", uniform_system(A_rand)),
        ("scalar doubling x -> 2x + w", uniform_system([[2.0]])),
        ("shear (Jordan block at 1)", uniform_system([[1.0, 1.0], [0.0, 1.0]])),
        ("identity in three dimensions", uniform_system(np.eye(3))),
        ("1D random walk", uniform_system([[1.0]])),
        ("rotation by pi/4", uniform_system(rot)),
        ("mixed diag(1, 0.5)", uniform_system(np.diag([1.0, 0.5]))),
        ("degenerate B = [1, 1]^T", uniform_system(np.eye(2), B=[[1.0], [1.0]])),
        ("dead third noise channel", uniform_system(np.eye(3), B=np.diag([1.0, 1.0, 0.0]))),
    ]

    for name, system in systems:
        target = TargetBall(center=np.zeros(system.dimension), radius=1.0)
        verdict = classify(system, target)
        print(f"\n=== {name} ===")
        print(f"verdict: {verdict.outcome} (certificate advice: {verdict.certificate_advice})")
        for test, value, decision in verdict.branch_trace:
            print(f"  {test}: {value} -> {decision}")
        for w in verdict.warnings:
            print(f"  warning: {w}")


if __name__ == "__main__":
    main()
