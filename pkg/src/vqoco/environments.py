"""Seeded benchmark generators.

Four instance families: a streaming ridge-regression problem with a norm
constraint that tracks a drifting target (two drift regimes), a strictly
feasible affine-constraint family with smoothly varying constraints, a
network resource-allocation problem on a bipartite mapping-node/data-center
graph, and a fractional job-scheduling relaxation with time-varying feasible
sets.

Every generator is a deterministic function of its config: regenerating with
the same seed reproduces bit-identical coefficient arrays.  Instances expose
closed-form per-round constraint drift whenever it exists, and carry their
coefficient tables in ``metadata`` for text snapshots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .problem import (
    AssumptionConstants,
    Box,
    BoxWithLinearCap,
    ConfigurationError,
    ConstraintOracle,
    LossOracle,
    ProblemInstance,
)

# ---------------------------------------------------------------------------
# online ridge regression


@dataclass(frozen=True)
class OrrConfig:
    horizon: int
    seed: int
    n: int = 5  # training pairs per round
    k: int = 5  # decision dimension
    box_bound: float = 7.0
    intercept: float = 1.0
    drift: str = "log"  # per-round step sets shrink as 1/(2t) ("log") or 1/(2 sqrt t) ("sqrt")

    def __post_init__(self):
        if self.n < 1 or self.k < 1:
            raise ConfigurationError("n and k must be >= 1")
        if not self.box_bound > 0.0:
            raise ConfigurationError("box_bound must be positive")
        if self.drift not in ("log", "sqrt"):
            raise ConfigurationError(f"drift must be 'log' or 'sqrt', got {self.drift!r}")
        if self.horizon < 1:
            raise ConfigurationError("horizon must be >= 1")


def _orr_half_width(drift: str, t: int) -> float:
    return 1.0 / (2.0 * t) if drift == "log" else 1.0 / (2.0 * math.sqrt(t))


def orr_generate(cfg: OrrConfig) -> ProblemInstance:
    """Build the ridge-regression instance; the drifting target is also the
    constrained per-round minimizer (zero loss, tight norm constraint)."""
    T, n, k = cfg.horizon, cfg.n, cfg.k
    C, b = cfg.box_bound, cfg.intercept
    rng = np.random.default_rng(cfg.seed)
    box = Box(np.full(k, -C), np.full(k, C))

    xs = np.empty((T, k))
    P = np.empty((T, n, k))
    p_prev = rng.uniform(-1.0, 1.0, (n, k))
    x_prev = np.zeros(k)
    for t in range(1, T + 1):
        h = _orr_half_width(cfg.drift, t)
        tau = rng.uniform(-h, h, k)
        u = rng.uniform(-h, h, (n, k))
        x_prev = box.project(x_prev + tau)
        p_prev = p_prev + u
        xs[t - 1] = x_prev
        P[t - 1] = p_prev
    q = np.einsum("tnk,tk->tn", P, xs) + b
    a = np.linalg.norm(xs, axis=1)

    sigma = np.linalg.norm(P, ord=2, axis=(1, 2))
    R = 2.0 * C * math.sqrt(k)
    smax = float(np.max(sigma))
    constants = AssumptionConstants(
        F=max(smax**2 * R**2, math.sqrt(k) * C),
        G=max(1.0, 2.0 * smax**2 * R),
        R=R,
        beta=1.0,  # | ||x|| - ||y|| | <= ||x - y||
    )

    def loss_at(t: int) -> LossOracle:
        Pt, qt = P[t - 1], q[t - 1]

        def value(x, Pt=Pt, qt=qt):
            r = Pt @ x + b - qt
            return float(r @ r)

        def grad(x, Pt=Pt, qt=qt):
            return 2.0 * (Pt.T @ (Pt @ x + b - qt))

        return LossOracle(eval=value, grad=grad)

    def constraints_at(t: int) -> ConstraintOracle:
        at = a[t - 1]

        def value(x, at=at):
            return np.array([np.linalg.norm(x) - at])

        def jac(x):
            norm = np.linalg.norm(x)
            row = x / norm if norm > 0.0 else np.zeros_like(x)
            return row[None, :]

        return ConstraintOracle(eval=value, jac=jac)

    def sup_dev(t: int) -> float:
        return abs(float(a[t - 1] - a[t - 2]))

    return ProblemInstance(
        horizon=T,
        loss_at=loss_at,
        constraints_at=constraints_at,
        set_at=lambda t: box,
        constants=constants,
        minimizer_at=lambda t: xs[t - 1],
        sup_deviation_at=sup_dev,
        name="orr",
        metadata={
            "config": cfg,
            "n_constraints": 1,
            "tables": {"x_star": xs, "a": a[:, None], "q": q, "p": P.reshape(T, n * k)},
        },
    )


@lru_cache(maxsize=8)
def _orr_cached(cfg: OrrConfig) -> ProblemInstance:
    return orr_generate(cfg)


def orr_sup_deviation(cfg: OrrConfig, t: int) -> float:
    """Exact per-round constraint drift |a_t - a_{t-1}| (x-independent)."""
    if t < 2:
        raise ConfigurationError("sup deviation defined for t >= 2")
    return _orr_cached(cfg).sup_deviation_at(t)


# ---------------------------------------------------------------------------
# strictly feasible affine-constraint family


def slater_instance(
    horizon: int,
    seed: int,
    eps: float = 0.2,
    drift_cap: float = 0.05,
    loss_scale: float = 50.0,
) -> ProblemInstance:
    """2-D instance with one affine constraint that keeps the origin strictly
    feasible (value -eps there) while its normal drifts by at most
    ``drift_cap`` per round in sup norm over the box.

    Quadratic losses track targets on the infeasible side of the constraint;
    ``loss_scale`` sets the outward pull strong enough that the constraint
    genuinely binds and the queue settles at a positive equilibrium.  The
    per-round minimizer is the exact projection of the target onto the box
    intersected with the halfspace.
    """
    if not 0.0 < drift_cap < eps:
        raise ConfigurationError("need 0 < drift_cap < eps")
    if horizon < 1:
        raise ConfigurationError("horizon must be >= 1")
    if not loss_scale > 0.0:
        raise ConfigurationError("loss_scale must be positive")
    T = int(horizon)
    rng = np.random.default_rng(seed)
    step = drift_cap / 2.0

    c = np.empty((T, 2))
    z = np.empty((T, 2))
    c_prev = np.array([0.6, 0.6])
    w_prev = np.array([0.85, 0.85])
    for t in range(T):
        c_prev = np.clip(c_prev + rng.uniform(-step, step, 2), 0.25, 1.0)
        w_prev = np.clip(w_prev + rng.uniform(-0.05, 0.05, 2), 0.7, 1.0)
        c[t] = c_prev
        z[t] = w_prev

    # sup over the box of |delta_c . x| is the l1 norm of delta_c
    devs = np.sum(np.abs(np.diff(c, axis=0)), axis=1) if T >= 2 else np.zeros(0)
    vbar = float(np.max(devs)) if devs.size else 0.0

    box = Box(np.array([-1.0, -1.0]), np.array([1.0, 1.0]))
    constants = AssumptionConstants(
        F=max(8.0 * loss_scale, float(np.max(np.sum(np.abs(c), axis=1))) + eps),
        G=4.0 * math.sqrt(2.0) * loss_scale,
        R=2.0 * math.sqrt(2.0),
        beta=float(np.max(np.linalg.norm(c, axis=1))),
        epsilon=eps,
        vbar_g=vbar,
    )

    def loss_at(t: int) -> LossOracle:
        zt = z[t - 1]
        return LossOracle(
            eval=lambda x, zt=zt: loss_scale * float((x - zt) @ (x - zt)),
            grad=lambda x, zt=zt: 2.0 * loss_scale * (x - zt),
        )

    def constraints_at(t: int) -> ConstraintOracle:
        ct = c[t - 1]
        return ConstraintOracle(
            eval=lambda x, ct=ct: np.array([float(ct @ x) - eps]),
            jac=lambda x, ct=ct: ct[None, :],
        )

    def minimizer_at(t: int) -> np.ndarray:
        region = BoxWithLinearCap(box.lower, box.upper, c[t - 1], eps)
        return region.project(z[t - 1])

    def sup_dev(t: int) -> float:
        return float(devs[t - 2])

    return ProblemInstance(
        horizon=T,
        loss_at=loss_at,
        constraints_at=constraints_at,
        set_at=lambda t: box,
        constants=constants,
        minimizer_at=minimizer_at,
        sup_deviation_at=sup_dev if T >= 2 else None,
        name="slater",
        metadata={
            "eps": eps,
            "drift_cap": drift_cap,
            "loss_scale": loss_scale,
            "seed": seed,
            "n_constraints": 1,
            "tables": {"c": c, "z": z, "d": np.full((T, 1), eps)},
        },
    )


# ---------------------------------------------------------------------------
# network resource allocation


@dataclass(frozen=True)
class NetworkConfig:
    horizon: int
    seed: int
    n_mapping: int = 2  # J
    n_centers: int = 2  # K
    bandwidth: float = 2.0  # per (j, k) link
    capacity: float = 3.0  # per data center
    arrival_base: float = 1.0
    arrival_amplitude: float = 0.3
    arrival_period: float = 50.0
    arrival_noise: float = 0.1

    def __post_init__(self):
        if self.n_mapping < 1 or self.n_centers < 1:
            raise ConfigurationError("need at least one mapping node and one center")
        if self.horizon < 1:
            raise ConfigurationError("horizon must be >= 1")
        if min(self.bandwidth, self.capacity) <= 0.0:
            raise ConfigurationError("bandwidth and capacity must be positive")


def build_incidence(n_mapping: int, n_centers: int) -> np.ndarray:
    """Node-edge incidence: link (j,k) leaves node j and enters center k;
    each center has one service edge leaving it."""
    J, K = n_mapping, n_centers
    A = np.zeros((J + K, J * K + K))
    for j in range(J):
        for k in range(K):
            e = j * K + k
            A[j, e] = -1.0
            A[J + k, e] = 1.0
    for k in range(K):
        A[J + k, J * K + k] = -1.0
    return A


def validate_incidence(A: np.ndarray, n_mapping: int, n_centers: int) -> None:
    J, K = n_mapping, n_centers
    expected = (J + K, J * K + K)
    if A.shape != expected:
        raise ConfigurationError(f"incidence shape {A.shape} != {expected} for J={J}, K={K}")
    if not np.all(np.isin(A, (-1.0, 0.0, 1.0))):
        raise ConfigurationError("incidence entries must be in {-1, 0, 1}")
    for e in range(J * K):
        col = A[:, e]
        if np.sum(col == -1.0) != 1 or np.sum(col == 1.0) != 1 or np.any(col[J:] == -1.0):
            raise ConfigurationError(f"link column {e} must leave one mapping node and enter one center")
    for k in range(K):
        col = A[:, J * K + k]
        if np.sum(col != 0.0) != 1 or col[J + k] != -1.0:
            raise ConfigurationError(f"service column {k} must leave center {k} only")


def network_instance(cfg: NetworkConfig, incidence: Optional[np.ndarray] = None) -> ProblemInstance:
    """Allocation over links and service edges with per-node long-term
    balance constraints A x + b_t <= 0 and drifting convex quadratic costs."""
    J, K, T = cfg.n_mapping, cfg.n_centers, cfg.horizon
    E = J * K + K
    A = build_incidence(J, K) if incidence is None else np.asarray(incidence, dtype=np.float64)
    validate_incidence(A, J, K)

    rng = np.random.default_rng(cfg.seed)
    quad = np.empty((T, E))
    lin = np.empty((T, E))
    b = np.zeros((T, J + K))
    quad_prev = rng.uniform(0.5, 1.5, E)
    lin_prev = rng.uniform(0.1, 1.0, E)
    phases = 2.0 * math.pi * np.arange(J) / J
    for t in range(1, T + 1):
        noise = rng.uniform(0.0, cfg.arrival_noise, J)
        quad_prev = np.clip(quad_prev + rng.uniform(-0.05, 0.05, E), 0.5, 1.5)
        lin_prev = np.clip(lin_prev + rng.uniform(-0.05, 0.05, E), 0.1, 1.0)
        wave = 1.0 + cfg.arrival_amplitude * np.sin(2.0 * math.pi * t / cfg.arrival_period + phases)
        b[t - 1, :J] = np.maximum(cfg.arrival_base * wave + noise, 0.0)
        quad[t - 1] = quad_prev
        lin[t - 1] = lin_prev

    upper = np.concatenate([np.full(J * K, cfg.bandwidth), np.full(K, cfg.capacity)])
    box = Box(np.zeros(E), upper)

    row_pos = np.where(A > 0.0, A, 0.0) @ upper + np.max(b, axis=0)
    row_neg = np.where(A < 0.0, A, 0.0) @ upper + np.min(b, axis=0)
    g_sup = float(np.linalg.norm(np.maximum(row_pos, -row_neg)))
    f_sup = float(np.max(quad @ (upper * upper) + lin @ upper))
    grad_f_sup = float(np.max(np.linalg.norm(2.0 * quad * upper + lin, axis=1)))
    row_norms = np.linalg.norm(A, axis=1)
    constants = AssumptionConstants(
        F=max(f_sup, g_sup),
        G=max(grad_f_sup, float(np.max(row_norms))),
        R=float(np.linalg.norm(upper)),
        beta=float(np.linalg.norm(A, ord=2)),
    )

    def loss_at(t: int) -> LossOracle:
        qt, lt = quad[t - 1], lin[t - 1]
        return LossOracle(
            eval=lambda x, qt=qt, lt=lt: float(qt @ (x * x) + lt @ x),
            grad=lambda x, qt=qt, lt=lt: 2.0 * qt * x + lt,
        )

    def constraints_at(t: int) -> ConstraintOracle:
        bt = b[t - 1]
        return ConstraintOracle(
            eval=lambda x, bt=bt: A @ x + bt,
            jac=lambda x: A,
        )

    def sup_dev(t: int) -> float:
        return float(np.linalg.norm(b[t - 1] - b[t - 2]))

    return ProblemInstance(
        horizon=T,
        loss_at=loss_at,
        constraints_at=constraints_at,
        set_at=lambda t: box,
        constants=constants,
        minimizer_at=None,
        sup_deviation_at=sup_dev,
        name="network",
        metadata={
            "config": cfg,
            "n_constraints": J + K,
            "incidence": A,
            "tables": {"arrivals": b, "quad_cost": quad, "lin_cost": lin},
            "static_tables": {"incidence": A, "edge_upper": upper[None, :]},
        },
    )


# ---------------------------------------------------------------------------
# fractional job scheduling


@dataclass(frozen=True)
class JobSchedConfig:
    horizon: int
    seed: int
    n_servers: int = 3
    n_jobs: int = 6
    norm_order: int = 2  # flowtime norm exponent
    min_cores: int = 2
    max_cores: int = 4
    max_duration: int = 8

    def __post_init__(self):
        if self.n_servers < 1 or self.n_jobs < 1:
            raise ConfigurationError("need at least one server and one job")
        if self.norm_order < 1:
            raise ConfigurationError("norm_order must be >= 1")
        if self.horizon < 2:
            raise ConfigurationError("horizon must be >= 2")


def jobsched_instance(cfg: JobSchedConfig) -> ProblemInstance:
    """Fractional core-rate allocation: linear per-round flowtime costs,
    per-job service-rate floor constraints, and a time-varying feasible set
    (unit box over active jobs intersected with the cluster capacity cap)."""
    T, M, N = cfg.horizon, cfg.n_servers, cfg.n_jobs
    rng = np.random.default_rng(cfg.seed)

    cores = rng.integers(cfg.min_cores, cfg.max_cores + 1, M)
    total_cores = int(np.sum(cores))
    arrivals = rng.integers(0, T // 2 + 1, N)
    durations = np.empty(N, dtype=np.int64)
    demands = np.empty(N, dtype=np.int64)
    for j in range(N):
        durations[j] = rng.integers(1, min(cfg.max_duration, T - arrivals[j]) + 1)
        demands[j] = rng.integers(1, max(total_cores // 2, 1) + 1)

    ratios = durations / (T - arrivals)
    active = np.zeros((T, N), dtype=bool)
    for t in range(1, T + 1):
        active[t - 1] = t > arrivals

    # Keep the rate-floor region inside the capacity cap at every round so the
    # per-round minimizer exists; shrink the largest offending demand if not.
    for _ in range(10_000):
        load = active @ (demands * ratios)
        worst = int(np.argmax(load))
        if load[worst] <= total_cores:
            break
        candidates = np.where(active[worst] & (demands > 1))[0]
        if candidates.size == 0:
            raise ConfigurationError("unschedulable job set even at unit demands")
        demands[candidates[np.argmax(demands[candidates])]] -= 1
    else:
        raise ConfigurationError("demand thinning did not converge")

    p = cfg.norm_order
    weights = np.zeros((T, N))
    for t in range(1, T + 1):
        act = active[t - 1]
        ages = t - arrivals[act]
        weights[t - 1, act] = ages**p / durations[act] + durations[act] ** (p - 1.0)

    constants = AssumptionConstants(
        F=max(float(np.max(weights @ np.ones(N))), math.sqrt(N)),
        G=max(float(np.max(np.linalg.norm(weights, axis=1))), 1.0),
        R=math.sqrt(N),
        beta=1.0,
    )

    def loss_at(t: int) -> LossOracle:
        wt = weights[t - 1]
        return LossOracle(
            eval=lambda y, wt=wt: float(wt @ y),
            grad=lambda y, wt=wt: wt.copy(),
        )

    def constraints_at(t: int) -> ConstraintOracle:
        act = active[t - 1]
        floor = np.where(act, ratios, 0.0)

        def value(y, act=act, floor=floor):
            return np.where(act, floor - y, 0.0)

        def jac(y, act=act):
            return np.diag(np.where(act, -1.0, 0.0))

        return ConstraintOracle(eval=value, jac=jac)

    def set_at(t: int) -> BoxWithLinearCap:
        act = active[t - 1]
        return BoxWithLinearCap(
            lower=np.zeros(N),
            upper=act.astype(np.float64),
            cap_weights=np.where(act, demands, 0.0).astype(np.float64),
            cap_value=float(total_cores),
        )

    def minimizer_at(t: int) -> np.ndarray:
        # linear loss with positive weights: sit exactly on the rate floor
        return np.where(active[t - 1], ratios, 0.0)

    return ProblemInstance(
        horizon=T,
        loss_at=loss_at,
        constraints_at=constraints_at,
        set_at=set_at,
        constants=constants,
        minimizer_at=minimizer_at,
        sup_deviation_at=None,  # activation jumps have no single closed form over the capped box
        name="jobsched",
        metadata={
            "config": cfg,
            "n_constraints": N,
            "tables": {"weights": weights, "active": active.astype(np.float64)},
            "static_tables": {
                "jobs": np.stack([arrivals, demands, durations], axis=1).astype(np.float64),
                "cores": cores[None, :].astype(np.float64),
            },
        },
    )


# ---------------------------------------------------------------------------
# snapshots


def snapshot_text(instance: ProblemInstance, max_rounds: Optional[int] = None) -> str:
    """Deterministic text dump of the generator's coefficient tables,
    round-indexed, for cross-implementation comparison."""
    lines = [f"# instance {instance.name} horizon {instance.horizon}"]
    static = instance.metadata.get("static_tables", {})
    for name in sorted(static):
        arr = np.atleast_2d(np.asarray(static[name], dtype=np.float64))
        lines.append(f"# static {name} {arr.shape[0]} {arr.shape[1]}")
        for row in arr:
            lines.append(" ".join(f"{v:.17g}" for v in row))
    tables = instance.metadata.get("tables", {})
    limit = instance.horizon if max_rounds is None else min(max_rounds, instance.horizon)
    for name in sorted(tables):
        arr = np.asarray(tables[name], dtype=np.float64)
        if arr.ndim == 1:
            arr = arr[:, None]
        lines.append(f"# table {name} {limit} {arr.shape[1]}")
        for t in range(limit):
            lines.append(" ".join(f"{v:.17g}" for v in arr[t]))
    return "\n".join(lines) + "\n"
