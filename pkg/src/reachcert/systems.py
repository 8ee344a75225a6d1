"""System models: linear and polynomial stochastic dynamics, noise laws,
target balls, and seeded reproducible sampling.

The dynamics are ``x_{k+1} = f(x_k, w_k)`` with i.i.d. zero-mean noise
``w_k``.  The linear special case is ``f(x, w) = A x + B w``.  Target
sets are open balls (Euclidean or weighted by a PD matrix).  All noise
sampling is driven by explicit per-trajectory seeds so ensembles are
reproducible regardless of execution order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import sympy

from .linalg import LinalgError, is_symmetric_positive_definite, weighted_norm

__all__ = [
    "NoiseModel",
    "LinearSystem",
    "PolynomialSystem",
    "TargetBall",
    "TrajectorySeed",
    "sample_noise",
    "step",
    "step_batch",
    "contains",
    "load_system",
    "load_target",
    "system_to_dict",
    "OverflowInStep",
]

UNIFORM_KINDS = ("uniform-box", "uniform-interval-product")


class OverflowInStep(ArithmeticError):
    """A transition produced a non-finite state."""


@dataclass(frozen=True)
class NoiseModel:
    """Zero-mean i.i.d. noise law.

    kind is "gaussian" (with covariance matrix ``cov``) or one of the
    uniform kinds (independent per-coordinate uniforms on
    ``[-h_i, h_i]`` given by ``half_widths``).  All supported kinds have
    finite third absolute moments and full support near the origin.
    """

    kind: str
    cov: np.ndarray | None = None
    half_widths: np.ndarray | None = None

    def __post_init__(self):
        if self.kind == "gaussian":
            if self.cov is None:
                raise ValueError("gaussian noise requires a covariance matrix")
            cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
            if not is_symmetric_positive_definite(cov):
                raise ValueError("noise covariance must be symmetric positive definite")
            object.__setattr__(self, "cov", cov)
            object.__setattr__(self, "half_widths", None)
        elif self.kind in UNIFORM_KINDS:
            if self.half_widths is None:
                raise ValueError(f"{self.kind} noise requires half_widths")
            h = np.asarray(self.half_widths, dtype=float).reshape(-1)
            if h.size == 0 or np.any(h <= 0) or not np.all(np.isfinite(h)):
                raise ValueError("half_widths must be positive and finite")
            object.__setattr__(self, "half_widths", h)
            object.__setattr__(self, "cov", None)
        else:
            raise ValueError(f"unknown noise kind {self.kind!r}")

    @property
    def dimension(self) -> int:
        if self.kind == "gaussian":
            return self.cov.shape[0]
        return self.half_widths.size

    @property
    def covariance(self) -> np.ndarray:
        """Sigma_w of the law (derived for the uniform kinds)."""
        if self.kind == "gaussian":
            return self.cov
        return np.diag(self.half_widths**2 / 3.0)

    @property
    def symmetric(self) -> bool:
        # All supported laws are symmetric about the origin; used by the
        # antithetic drift estimator.
        return True

    def to_dict(self) -> dict:
        if self.kind == "gaussian":
            return {"kind": "gaussian", "cov": self.cov.tolist()}
        return {"kind": self.kind, "half_widths": self.half_widths.tolist()}

    @staticmethod
    def from_dict(d: dict) -> "NoiseModel":
        kind = d.get("kind")
        if kind == "gaussian":
            return NoiseModel(kind="gaussian", cov=np.asarray(d["cov"], dtype=float))
        if kind in UNIFORM_KINDS:
            return NoiseModel(kind=kind, half_widths=np.asarray(d["half_widths"], dtype=float))
        raise ValueError(f"unknown noise kind {kind!r}")

    @staticmethod
    def uniform(half_widths) -> "NoiseModel":
        return NoiseModel(kind="uniform-box", half_widths=np.atleast_1d(half_widths))

    @staticmethod
    def gaussian(cov) -> "NoiseModel":
        return NoiseModel(kind="gaussian", cov=np.atleast_2d(cov))


@dataclass(frozen=True)
class LinearSystem:
    """x_{k+1} = A x_k + B w_k with additive zero-mean noise."""

    A: np.ndarray
    B: np.ndarray
    noise: NoiseModel

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        B = np.atleast_2d(np.asarray(self.B, dtype=float))
        if A.shape[0] != A.shape[1]:
            raise ValueError(f"A must be square, got {A.shape}")
        if B.shape[0] != A.shape[0]:
            raise ValueError(f"B has {B.shape[0]} rows but state dimension is {A.shape[0]}")
        if B.shape[1] != self.noise.dimension:
            raise ValueError(
                f"B has {B.shape[1]} columns but noise dimension is {self.noise.dimension}"
            )
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(B))):
            raise ValueError("system matrices must be finite")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)

    @property
    def dimension(self) -> int:
        return self.A.shape[0]

    @property
    def noise_dimension(self) -> int:
        return self.B.shape[1]


def _compile_transition(exprs, n, m):
    xs = sympy.symbols(f"x1:{n + 1}")
    ws = sympy.symbols(f"w1:{m + 1}")
    allowed = set(xs) | set(ws)
    parsed = []
    for text in exprs:
        e = sympy.sympify(text.replace("^", "**"))
        extra = e.free_symbols - allowed
        if extra:
            raise ValueError(f"unknown symbols {sorted(map(str, extra))} in transition {text!r}")
        parsed.append(e)
    fn = sympy.lambdify(list(xs) + list(ws), parsed, modules="numpy")

    def transition(x, w):
        return np.asarray(fn(*x, *w), dtype=float)

    def transition_batch(X, W):
        N = max(X.shape[0], W.shape[0])
        args = [np.broadcast_to(X[:, i], (N,)) for i in range(X.shape[1])]
        args += [np.broadcast_to(W[:, i], (N,)) for i in range(W.shape[1])]
        out = fn(*args)
        cols = [np.broadcast_to(np.asarray(c, dtype=float), (N,)) for c in out]
        return np.column_stack(cols)

    return transition, transition_batch


@dataclass(frozen=True)
class PolynomialSystem:
    """x_{k+1} given by per-coordinate polynomial maps over state and noise.

    ``transition_exprs`` are strings in variables x1..xn, w1..wm using
    +, -, *, ^ and parentheses (e.g. "0.5*x1*(1 + x2 + w1)").
    """

    transition_exprs: tuple
    noise: NoiseModel
    _transition: object = field(default=None, repr=False, compare=False)
    _transition_batch: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        exprs = tuple(str(e) for e in self.transition_exprs)
        object.__setattr__(self, "transition_exprs", exprs)
        n, m = len(exprs), self.noise.dimension
        if n == 0:
            raise ValueError("transition must have at least one coordinate")
        single, batch = _compile_transition(exprs, n, m)
        object.__setattr__(self, "_transition", single)
        object.__setattr__(self, "_transition_batch", batch)

    @property
    def dimension(self) -> int:
        return len(self.transition_exprs)

    @property
    def noise_dimension(self) -> int:
        return self.noise.dimension


@dataclass(frozen=True)
class TargetBall:
    """Open ball target set {x : ||x - center|| < radius}.

    The norm is Euclidean or weighted by a symmetric PD matrix.
    Membership uses strict inequality (open-set semantics).
    """

    center: np.ndarray
    radius: float
    weight: np.ndarray | None = None  # None means Euclidean

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).reshape(-1)
        if self.radius <= 0:
            raise ValueError("target radius must be positive")
        object.__setattr__(self, "center", c)
        if self.weight is not None:
            W = np.atleast_2d(np.asarray(self.weight, dtype=float))
            if not is_symmetric_positive_definite(W):
                raise ValueError("target norm weight must be symmetric positive definite")
            if W.shape[0] != c.size:
                raise ValueError("target weight dimension mismatch")
            object.__setattr__(self, "weight", W)

    @property
    def dimension(self) -> int:
        return self.center.size

    def norm_of(self, v) -> float:
        v = np.asarray(v, dtype=float).reshape(-1)
        if self.weight is None:
            return float(np.linalg.norm(v))
        return weighted_norm(v, self.weight)

    def contains_origin(self) -> bool:
        return self.norm_of(-self.center) < self.radius

    def to_dict(self) -> dict:
        norm = "euclidean" if self.weight is None else {"weighted": self.weight.tolist()}
        return {"center": self.center.tolist(), "radius": self.radius, "norm": norm}

    @staticmethod
    def from_dict(d: dict) -> "TargetBall":
        norm = d.get("norm", "euclidean")
        weight = None
        if isinstance(norm, dict):
            weight = np.asarray(norm["weighted"], dtype=float)
        elif norm != "euclidean":
            raise ValueError(f"unknown target norm {norm!r}")
        return TargetBall(
            center=np.asarray(d["center"], dtype=float),
            radius=float(d["radius"]),
            weight=weight,
        )


@dataclass(frozen=True)
class TrajectorySeed:
    """Derives an independent RNG stream from (base seed, trajectory index)."""

    base: int
    index: int = 0

    def rng(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.base, spawn_key=(self.index,))
        return np.random.Generator(np.random.Philox(ss))


def _draw(noise: NoiseModel, rng: np.random.Generator, count: int) -> np.ndarray:
    m = noise.dimension
    if noise.kind == "gaussian":
        L = np.linalg.cholesky(noise.cov)
        z = rng.standard_normal(size=(count, m))
        return z @ L.T
    h = noise.half_widths
    return rng.uniform(-1.0, 1.0, size=(count, m)) * h


def sample_noise(noise: NoiseModel, seed: TrajectorySeed, count: int) -> np.ndarray:
    """Draw ``count`` i.i.d. noise vectors; shape (count, m).

    Identical (noise, seed, count) triples reproduce bit-identical output.
    """
    if count < 0:
        raise ValueError("count must be non-negative")
    return _draw(noise, seed.rng(), count)


def step(system, x, w):
    """One transition x -> f(x, w).  Raises OverflowInStep on non-finite output."""
    x = np.asarray(x, dtype=float).reshape(-1)
    w = np.asarray(w, dtype=float).reshape(-1)
    if x.size != system.dimension:
        raise ValueError(f"state has {x.size} entries, system dimension is {system.dimension}")
    if w.size != system.noise_dimension:
        raise ValueError(f"noise has {w.size} entries, expected {system.noise_dimension}")
    with np.errstate(over="ignore", invalid="ignore"):
        if isinstance(system, LinearSystem):
            out = system.A @ x + system.B @ w
        else:
            out = system._transition(x, w)
    if not np.all(np.isfinite(out)):
        raise OverflowInStep(f"non-finite state after step from x={x}")
    return out


def step_batch(system, X, W) -> np.ndarray:
    """Vectorized transitions: rows of X and W are states/noise vectors.

    Returns the (N, n) array of successors.  Unlike `step`, non-finite
    outputs are returned as-is; callers doing long simulations mask them
    (overflow handling is a per-trajectory policy, not an exception).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    W = np.atleast_2d(np.asarray(W, dtype=float))
    if isinstance(system, LinearSystem):
        return X @ system.A.T + W @ system.B.T
    return system._transition_batch(X, W)


def contains(target: TargetBall, x) -> bool:
    """Strict open-ball membership in the target's norm."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != target.dimension:
        raise ValueError("dimension mismatch between state and target")
    return target.norm_of(x - target.center) < target.radius


# ---------------------------------------------------------------------------
# System description files (JSON)
# ---------------------------------------------------------------------------

def system_to_dict(system, target: TargetBall | None = None) -> dict:
    if isinstance(system, LinearSystem):
        d = {
            "A": system.A.tolist(),
            "B": system.B.tolist(),
            "noise": system.noise.to_dict(),
        }
    else:
        d = {
            "transition": list(system.transition_exprs),
            "noise": system.noise.to_dict(),
        }
    if target is not None:
        d["target"] = target.to_dict()
    return d


def _system_from_dict(d: dict):
    noise = NoiseModel.from_dict(d["noise"])
    if "transition" in d:
        return PolynomialSystem(transition_exprs=tuple(d["transition"]), noise=noise)
    if "A" not in d or "B" not in d:
        raise ValueError("system file needs either 'A'/'B' or 'transition'")
    return LinearSystem(
        A=np.asarray(d["A"], dtype=float),
        B=np.asarray(d["B"], dtype=float),
        noise=noise,
    )


def load_system(path):
    """Load (system, target-or-None) from a JSON description file."""
    with open(path) as fh:
        d = json.load(fh)
    system = _system_from_dict(d)
    target = TargetBall.from_dict(d["target"]) if "target" in d else None
    return system, target


def load_target(d_or_path) -> TargetBall:
    if isinstance(d_or_path, dict):
        return TargetBall.from_dict(d_or_path)
    with open(d_or_path) as fh:
        return TargetBall.from_dict(json.load(fh))
