"""Domain types for constrained online convex optimization instances.

Decision vectors are plain float64 numpy arrays.  Feasible sets are a closed
enumeration of three variants with exact projections; losses and constraints
are oracle pairs (value + gradient / value + Jacobian) with declared
boundedness constants.  Everything here is immutable after construction and
safe to share between concurrent runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from . import _kernels


class ConfigurationError(ValueError):
    """A type or set was constructed with inconsistent parameters."""


def _as_vector(value, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(value, dtype=np.float64))
    if arr.ndim != 1:
        raise ConfigurationError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ConfigurationError(f"{name} must be finite")
    return arr


def require_finite(point, name: str = "point") -> np.ndarray:
    """Coerce to a finite float64 vector, raising on NaN/Inf."""
    arr = np.atleast_1d(np.asarray(point, dtype=np.float64))
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries: {arr}")
    return arr


@dataclass(frozen=True, eq=False)
class Box:
    """Axis-aligned box {x : lower <= x <= upper}."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = _as_vector(self.lower, "lower")
        hi = _as_vector(self.upper, "upper")
        if lo.shape != hi.shape:
            raise ConfigurationError("lower and upper must have equal length")
        if np.any(lo > hi):
            raise ConfigurationError("empty box: lower > upper componentwise")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def project(self, point) -> np.ndarray:
        return _kernels.box_project(require_finite(point), self.lower, self.upper)

    def contains(self, point, tol: float = 0.0) -> bool:
        x = np.asarray(point, dtype=np.float64)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))

    def diameter(self) -> float:
        return float(np.linalg.norm(self.upper - self.lower))

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        u = rng.random((count, self.dim))
        return self.lower + u * (self.upper - self.lower)


@dataclass(frozen=True, eq=False)
class Ball:
    """Euclidean ball {x : ||x - center|| <= radius}."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = _as_vector(self.center, "center")
        r = float(self.radius)
        if not (r > 0.0 and math.isfinite(r)):
            raise ConfigurationError("radius must be positive and finite")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", r)

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def project(self, point) -> np.ndarray:
        return _kernels.ball_project(require_finite(point), self.center, self.radius)

    def contains(self, point, tol: float = 0.0) -> bool:
        x = np.asarray(point, dtype=np.float64)
        return bool(np.linalg.norm(x - self.center) <= self.radius + tol)

    def diameter(self) -> float:
        return 2.0 * self.radius

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        # Drawn one point at a time so a longer run extends a shorter one
        # (prefix property used by the sup-deviation estimator).
        n = self.dim
        out = np.empty((count, n))
        for i in range(count):
            direction = rng.standard_normal(n)
            norm = np.linalg.norm(direction)
            if norm == 0.0:
                direction = np.zeros(n)
                direction[0] = 1.0
                norm = 1.0
            r = self.radius * rng.random() ** (1.0 / n)
            out[i] = self.center + direction * (r / norm)
        return out


@dataclass(frozen=True, eq=False)
class BoxWithLinearCap:
    """Box intersected with one halfspace {x : cap_weights . x <= cap_value}."""

    lower: np.ndarray
    upper: np.ndarray
    cap_weights: np.ndarray
    cap_value: float

    def __post_init__(self):
        lo = _as_vector(self.lower, "lower")
        hi = _as_vector(self.upper, "upper")
        w = _as_vector(self.cap_weights, "cap_weights")
        cap = float(self.cap_value)
        if not (lo.shape == hi.shape == w.shape):
            raise ConfigurationError("lower, upper and cap_weights must have equal length")
        if np.any(lo > hi):
            raise ConfigurationError("empty box: lower > upper componentwise")
        if float(np.dot(w, lo)) > cap:
            raise ConfigurationError("cap not satisfiable at the lower corner")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        object.__setattr__(self, "cap_weights", w)
        object.__setattr__(self, "cap_value", cap)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def project(self, point) -> np.ndarray:
        return _kernels.capbox_project(
            require_finite(point), self.lower, self.upper, self.cap_weights, self.cap_value
        )

    def contains(self, point, tol: float = 0.0) -> bool:
        x = np.asarray(point, dtype=np.float64)
        in_box = bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))
        return in_box and float(np.dot(self.cap_weights, x)) <= self.cap_value + tol

    def diameter(self) -> float:
        # Exact sup-distance over the polytope would need vertex enumeration;
        # the box diagonal is a valid diameter bound and is what schedule
        # formulas consume.
        return float(np.linalg.norm(self.upper - self.lower))

    def sample(self, rng: np.random.Generator, count: int, max_tries: int = 10_000) -> np.ndarray:
        out = np.empty((count, self.dim))
        got = 0
        for _ in range(max_tries * max(count, 1)):
            if got == count:
                break
            u = rng.random(self.dim)
            x = self.lower + u * (self.upper - self.lower)
            if np.dot(self.cap_weights, x) <= self.cap_value:
                out[got] = x
                got += 1
        if got < count:
            raise ConfigurationError(
                "rejection sampling under the cap failed; acceptance region too small"
            )
        return out


FeasibleSet = Union[Box, Ball, BoxWithLinearCap]


def project(feasible_set: FeasibleSet, point) -> np.ndarray:
    """Euclidean projection of ``point`` onto the set (exact per variant)."""
    return feasible_set.project(point)


def diameter(feasible_set: FeasibleSet) -> float:
    """Diameter sup ||x - y|| over the set, closed form per variant."""
    return feasible_set.diameter()


@dataclass(frozen=True, eq=False)
class LossOracle:
    """Scalar convex loss with analytic gradient."""

    eval: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class ConstraintOracle:
    """Vector-valued convex constraints g(x) in R^K with Jacobian rows grad g_k."""

    eval: Callable[[np.ndarray], np.ndarray]
    jac: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class AssumptionConstants:
    """Boundedness constants of the instance.

    ``F`` bounds |f_t| and ||g_t||, ``G`` bounds gradient norms, ``R`` is the
    feasible-set diameter and ``beta`` the constraint Lipschitz constant
    (defaults to K*G when no tighter analytic value is known).  ``epsilon``
    and ``vbar_g`` are only present for instances with a strictly feasible
    point and smoothly varying constraints.
    """

    F: float
    G: float
    R: float
    beta: float
    epsilon: Optional[float] = None
    vbar_g: Optional[float] = None

    def __post_init__(self):
        for name in ("F", "G", "R", "beta"):
            v = float(getattr(self, name))
            if not (v > 0.0 and math.isfinite(v)):
                raise ConfigurationError(f"{name} must be positive and finite, got {v}")
            object.__setattr__(self, name, v)
        if self.epsilon is not None:
            object.__setattr__(self, "epsilon", float(self.epsilon))
            if self.epsilon <= 0.0:
                raise ConfigurationError("epsilon must be positive")
        if self.vbar_g is not None:
            object.__setattr__(self, "vbar_g", float(self.vbar_g))
            if self.vbar_g < 0.0:
                raise ConfigurationError("vbar_g must be nonnegative")
        if self.epsilon is not None and self.vbar_g is not None:
            if not self.epsilon > self.vbar_g:
                raise ConfigurationError("epsilon must exceed vbar_g")


def default_beta(n_constraints: int, grad_bound: float) -> float:
    """Fallback Lipschitz constant K*G when no tighter value is supplied."""
    return float(n_constraints) * float(grad_bound)


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """Horizon-indexed access to loss/constraint oracles and feasible sets.

    Rounds are 1-indexed: accessors are valid for 1 <= t <= horizon.
    ``minimizer_at`` returns the per-round constrained minimizer when the
    generator knows it; ``sup_deviation_at(t)`` returns the exact value of
    sup_x ||g_t(x) - g_{t-1}(x)|| (t >= 2) when it has a closed form.
    """

    horizon: int
    loss_at: Callable[[int], LossOracle]
    constraints_at: Callable[[int], ConstraintOracle]
    set_at: Callable[[int], FeasibleSet]
    constants: AssumptionConstants
    minimizer_at: Optional[Callable[[int], np.ndarray]] = None
    sup_deviation_at: Optional[Callable[[int], float]] = None
    name: str = ""
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if int(self.horizon) < 1:
            raise ConfigurationError("horizon must be >= 1")
        object.__setattr__(self, "horizon", int(self.horizon))

    def check_round(self, t: int) -> int:
        if not 1 <= t <= self.horizon:
            raise IndexError(f"round {t} outside 1..{self.horizon}")
        return t


@dataclass(frozen=True)
class BoundsReport:
    """Observed maxima from sampling versus the declared constants."""

    max_loss: float
    max_constraint_norm: float
    max_loss_grad: float
    max_constraint_grad: float
    declared_F: float
    declared_G: float
    flags: tuple

    @property
    def ok(self) -> bool:
        return not self.flags


def check_assumption_bounds(
    instance: ProblemInstance,
    samples: int,
    seed: int,
    rounds: Optional[int] = None,
) -> BoundsReport:
    """Sample the oracles and compare observed maxima with declared F, G.

    Violations are reported in ``flags``, never raised.  ``rounds`` limits how
    many (evenly spaced) rounds are probed; all of them by default.
    """
    if samples < 1:
        raise ConfigurationError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    T = instance.horizon
    if rounds is None or rounds >= T:
        t_list = range(1, T + 1)
    else:
        t_list = sorted({int(t) for t in np.linspace(1, T, rounds)})

    max_f = 0.0
    max_g = 0.0
    max_df = 0.0
    max_dg = 0.0
    for t in t_list:
        loss = instance.loss_at(t)
        cons = instance.constraints_at(t)
        points = instance.set_at(t).sample(rng, samples)
        for x in points:
            max_f = max(max_f, abs(float(loss.eval(x))))
            max_g = max(max_g, float(np.linalg.norm(cons.eval(x))))
            max_df = max(max_df, float(np.linalg.norm(loss.grad(x))))
            jac = np.atleast_2d(cons.jac(x))
            max_dg = max(max_dg, float(np.max(np.linalg.norm(jac, axis=1))))

    F = instance.constants.F
    G = instance.constants.G
    flags = []
    if max_f > F:
        flags.append(f"loss bound exceeded: observed {max_f:.6g} > F={F:.6g}")
    if max_g > F:
        flags.append(f"constraint bound exceeded: observed {max_g:.6g} > F={F:.6g}")
    if max_df > G:
        flags.append(f"loss gradient bound exceeded: observed {max_df:.6g} > G={G:.6g}")
    if max_dg > G:
        flags.append(f"constraint gradient bound exceeded: observed {max_dg:.6g} > G={G:.6g}")
    return BoundsReport(
        max_loss=max_f,
        max_constraint_norm=max_g,
        max_loss_grad=max_df,
        max_constraint_grad=max_dg,
        declared_F=F,
        declared_G=G,
        flags=tuple(flags),
    )
