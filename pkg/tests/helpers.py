"""Shared test utilities: brute-force oracles, queue-property checks, and a
family of random tracking instances with analytic minimizers."""

from __future__ import annotations

import numpy as np

from vqoco import (
    AssumptionConstants,
    Box,
    ConstraintOracle,
    LossOracle,
    ProblemInstance,
)


def grid_points(lower, upper, resolution):
    """1-D or 2-D regular grid over a box, including both endpoints."""
    lower = np.atleast_1d(np.asarray(lower, dtype=np.float64))
    upper = np.atleast_1d(np.asarray(upper, dtype=np.float64))
    axes = [
        np.linspace(lo, hi, int(round((hi - lo) / resolution)) + 1)
        for lo, hi in zip(lower, upper)
    ]
    if len(axes) == 1:
        return axes[0][:, None]
    if len(axes) == 2:
        return axes
    raise ValueError("grid oracle supports 1-D and 2-D only")


def grid_argmin(fun, lower, upper, resolution, feasible=None, chunk=200_000):
    """Brute-force minimizer over a grid; ``fun`` and ``feasible`` must accept
    an (m, n) batch of points.  Returns (best_point, best_value)."""
    pts = grid_points(lower, upper, resolution)
    if isinstance(pts, np.ndarray):  # 1-D
        batch = pts
        vals = fun(batch)
        if feasible is not None:
            vals = np.where(feasible(batch), vals, np.inf)
        i = int(np.argmin(vals))
        return batch[i].copy(), float(vals[i])
    ax, ay = pts
    best_val = np.inf
    best_pt = None
    rows_per_chunk = max(1, chunk // ay.shape[0])
    for start in range(0, ax.shape[0], rows_per_chunk):
        xs = ax[start : start + rows_per_chunk]
        gx, gy = np.meshgrid(xs, ay, indexing="ij")
        batch = np.stack([gx.ravel(), gy.ravel()], axis=1)
        vals = fun(batch)
        if feasible is not None:
            vals = np.where(feasible(batch), vals, np.inf)
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best_val = float(vals[i])
            best_pt = batch[i].copy()
    return best_pt, best_val


def queue_property_slack(record) -> float:
    """Worst violation of the five queue properties for one step record.

    The record stores the queue before/after one update together with the
    exact (gamma, g) inputs that update consumed, so each property is a pure
    arithmetic identity; the returned slack should be ~1e-12.
    """
    lam, prev = record.lam, record.lam_prev
    gam, g = record.dual_gamma, record.dual_g
    worst = float(np.max(-lam, initial=0.0))  # nonnegativity
    worst = max(worst, float(np.max(-(lam + gam * g), initial=0.0)))
    worst = max(worst, gam * float(np.linalg.norm(g)) - float(np.linalg.norm(lam)))
    worst = max(worst, float(np.max(gam * g - (lam - prev), initial=0.0)))
    worst = max(
        worst,
        float(np.linalg.norm(lam)) - float(np.linalg.norm(prev)) - gam * float(np.linalg.norm(g)),
    )
    drift = 0.5 * (float(lam @ lam) - float(prev @ prev))
    bound = gam * float(prev @ g) + gam * gam * float(g @ g)
    worst = max(worst, drift - bound)
    return worst


def random_tracking_instance(seed: int, n: int = 3, n_constraints: int = 2, horizon: int = 200):
    """Quadratic tracking losses with affine time-varying constraints.

    The drifting target z_t is kept strictly feasible by construction, so it
    is the exact per-round constrained minimizer; constraint offsets move
    every round, giving a closed-form per-round sup deviation.
    """
    rng = np.random.default_rng(seed)
    box = Box(-np.ones(n), np.ones(n))
    scale = float(rng.uniform(0.5, 3.0))
    Cmat = rng.uniform(-1.0, 1.0, (n_constraints, n))

    z = np.empty((horizon, n))
    d = np.empty((horizon, n_constraints))
    z_prev = rng.uniform(-1.0, 1.0, n)
    for t in range(horizon):
        z_prev = np.clip(z_prev + rng.uniform(-0.3, 0.3, n), -1.0, 1.0)
        z[t] = z_prev
        d[t] = Cmat @ z_prev + rng.uniform(0.02, 0.4, n_constraints)

    g_sup = float(np.max(np.sum(np.abs(Cmat), axis=1) + np.max(np.abs(d), axis=0)))
    constants = AssumptionConstants(
        F=max(scale * 4.0 * n, g_sup),
        G=max(2.0 * scale * 2.0 * np.sqrt(n), float(np.max(np.linalg.norm(Cmat, axis=1)))),
        R=2.0 * np.sqrt(n),
        beta=float(np.linalg.norm(Cmat, ord=2)),
    )

    def loss_at(t):
        zt = z[t - 1]
        return LossOracle(
            eval=lambda x, zt=zt: scale * float((x - zt) @ (x - zt)),
            grad=lambda x, zt=zt: 2.0 * scale * (x - zt),
        )

    def constraints_at(t):
        dt = d[t - 1]
        return ConstraintOracle(
            eval=lambda x, dt=dt: Cmat @ x - dt,
            jac=lambda x: Cmat,
        )

    def sup_dev(t):
        return float(np.linalg.norm(d[t - 1] - d[t - 2]))

    return ProblemInstance(
        horizon=horizon,
        loss_at=loss_at,
        constraints_at=constraints_at,
        set_at=lambda t: box,
        constants=constants,
        minimizer_at=lambda t: z[t - 1],
        sup_deviation_at=sup_dev,
        name="tracking",
        metadata={"n_constraints": n_constraints, "seed": seed},
    )
