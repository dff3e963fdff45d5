"""Drive a learner over an instance, recording the trajectory.

The loop enforces the feedback order: the action for round t is fixed before
the round-t oracles are revealed, and the learner receives the next round's
feasible set only inside ``observe``.  The comparator (per-round constrained
minimizer) is taken from the instance when the generator knows it, otherwise
computed here with the penalty-homotopy solver; the final round still runs a
queue update so telescoped queue identities close at t = T.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .learners import DoublingLearner, StepRecord
from .metrics import Trajectory
from .problem import ProblemInstance
from .subsolvers import SolverConfig, per_slot_minimizer


def _comparator(instance: ProblemInstance, t: int, solver_cfg: SolverConfig) -> np.ndarray:
    """Round-t constrained minimizer, memoized on the instance so every
    algorithm in a run group shares one comparator computation."""
    if instance.minimizer_at is not None:
        return np.asarray(instance.minimizer_at(t), dtype=np.float64)
    cache = instance.metadata.setdefault("_minimizer_cache", {})
    if t not in cache:
        cache[t] = per_slot_minimizer(
            instance.loss_at(t), instance.constraints_at(t), instance.set_at(t), solver_cfg
        )
    return cache[t]


def rollout(
    learner,
    instance: ProblemInstance,
    algorithm: str,
    seed: int,
    preset: Optional[str] = None,
    solver_cfg: SolverConfig = SolverConfig(),
    metadata: Optional[dict] = None,
) -> tuple[Trajectory, list[StepRecord]]:
    T = instance.horizon
    provided = instance.minimizer_at is not None
    records: list[StepRecord] = []

    actions = None
    minimizers = None
    loss_vals = np.empty(T)
    comp_loss = np.empty(T)
    gvals = None
    lam_norm = np.empty(T)
    alphas = np.empty(T)
    gammas = np.empty(T)
    residuals = np.empty(T)
    comp_vio = -np.inf

    for t in range(1, T + 1):
        x = np.asarray(learner.act(), dtype=np.float64)
        loss = instance.loss_at(t)
        cons = instance.constraints_at(t)
        chi_next = instance.set_at(min(t + 1, T))
        x_star = _comparator(instance, t, solver_cfg)

        record = learner.observe(t, loss, cons, chi_next, x_star)
        records.append(record)

        g_here = np.atleast_1d(cons.eval(x))
        if actions is None:
            actions = np.empty((T, x.shape[0]))
            minimizers = np.empty((T, x.shape[0]))
            gvals = np.empty((T, g_here.shape[0]))
        actions[t - 1] = x
        minimizers[t - 1] = x_star
        loss_vals[t - 1] = float(loss.eval(x))
        comp_loss[t - 1] = float(loss.eval(x_star))
        gvals[t - 1] = g_here
        lam_norm[t - 1] = record.lam_norm
        alphas[t - 1] = record.alpha
        gammas[t - 1] = record.gamma
        residuals[t - 1] = record.residual
        comp_vio = max(comp_vio, float(np.max(cons.eval(x_star))))

    traj = Trajectory(
        algorithm=algorithm,
        env=instance.name,
        seed=seed,
        horizon=T,
        actions=actions,
        loss=loss_vals,
        gvals=gvals,
        lambda_norm=lam_norm,
        alpha=alphas,
        gamma=gammas,
        residual=residuals,
        lam_final=records[-1].lam.copy(),
        minimizers=minimizers,
        comparator_loss=comp_loss,
        comparator_vio_max=comp_vio,
        minimizer_mode="provided" if provided else "solved",
        preset=preset,
        metadata=dict(metadata or {}),
    )
    return traj, records


def doubling_run(
    factory,
    instance: ProblemInstance,
    algorithm: str = "doubling",
    seed: int = 0,
    solver_cfg: SolverConfig = SolverConfig(),
) -> tuple[Trajectory, list[StepRecord]]:
    """Run a doubling-trick wrapper over the whole instance horizon.

    ``factory(epoch_horizon, chi_first)`` builds the fresh inner learner for
    each epoch; the realized horizon stays unknown to the learner.
    """
    learner = DoublingLearner(factory, instance.set_at(1))
    return rollout(learner, instance, algorithm, seed, solver_cfg=solver_cfg)
