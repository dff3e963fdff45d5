"""Online learners: the virtual-queue algorithm with its two parameter
schedules, the constant-parameter variant for strictly feasible instances,
a doubling-trick wrapper for unknown horizons, and a generic online
saddle-point baseline with literature presets.

All learners share one protocol: ``act()`` returns the current action (which
must only depend on information revealed before this round plus the current
feasible set), and ``observe(t, loss, constraints, chi_next, minimizer)``
consumes the revealed round-t oracles and prepares the next action.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from ._kernels import dual_update as _dual_update_kernel
from .problem import (
    AssumptionConstants,
    ConfigurationError,
    ConstraintOracle,
    FeasibleSet,
    LossOracle,
)
from .subsolvers import SolverConfig, SubproblemSpec, per_slot_minimizer, solve_primal_subproblem

PRESET_NAMES = ("cao2018", "chen2017", "chen2018", "chen2019", "vqb_case1", "vqb_case2")


@dataclass(frozen=True)
class StepRecord:
    """Everything one observe() produced, for trajectories and invariants.

    ``lam``/``lam_prev`` bracket the queue update of this step and
    ``dual_gamma``/``dual_g`` are exactly the inputs that update consumed, so
    all queue properties are checkable from a single record.
    """

    t: int
    x_next: np.ndarray
    lam: np.ndarray
    lam_prev: np.ndarray
    dual_gamma: float
    dual_g: np.ndarray
    alpha: float
    gamma: float
    residual: float

    @property
    def lam_norm(self) -> float:
        return float(np.linalg.norm(self.lam))


# ---------------------------------------------------------------------------
# schedules and dual updates


def alpha_schedule(t: int, horizon: int, R: float, path_len: float) -> float:
    """Proximal weight sqrt(T / (R + running minimizer path length))."""
    if not R > 0.0:
        raise ConfigurationError("R must be positive")
    if path_len < 0.0:
        raise ConfigurationError("path_len must be nonnegative")
    return math.sqrt(horizon / (R + path_len))


def gamma_schedule(case: str, t: int, beta: float, R: float) -> float:
    """Constraint weight; constant for case1, decaying as (t+1)^(-1/4) for case2."""
    if not (beta > 0.0 and R > 0.0):
        raise ConfigurationError("beta and R must be positive")
    if t < 0:
        raise ConfigurationError("t must be >= 0")
    base_sq = 1.0 / (2.0 * beta * beta) / math.sqrt(2.0 * R)
    if case == "case1":
        return math.sqrt(base_sq)
    if case == "case2":
        return math.sqrt(base_sq / math.sqrt(t + 1.0))
    raise ConfigurationError(f"unknown schedule case {case!r}")


def vqb_dual_update(lambda_prev: np.ndarray, gamma_prev: float, g_prev_at_x: np.ndarray) -> np.ndarray:
    """Queue update max{lam + gamma*g, -gamma*g}, componentwise."""
    lam = np.asarray(lambda_prev, dtype=np.float64)
    g = np.asarray(g_prev_at_x, dtype=np.float64)
    return _dual_update_kernel(lam, float(gamma_prev), g)


def slater_dual_update(lambda_prev: np.ndarray, gamma: float, g_now_at_x: np.ndarray) -> np.ndarray:
    """Same update rule, fed with the current round's constraint values."""
    return vqb_dual_update(lambda_prev, gamma, g_now_at_x)


def slater_params(a: float, horizon: int, beta: float) -> tuple[float, float]:
    """Constant (alpha, gamma) with alpha = T^a and gamma^2 = T^a / (2 beta^2)."""
    if not 0.0 < a < 1.0:
        raise ConfigurationError("exponent a must lie in (0, 1)")
    if horizon < 1:
        raise ConfigurationError("horizon must be >= 1")
    if not beta > 0.0:
        raise ConfigurationError("beta must be positive")
    alpha = float(horizon) ** a
    gamma = math.sqrt(alpha / (2.0 * beta * beta))
    return alpha, gamma


def slater_queue_cap(constants: AssumptionConstants, alpha: float, gamma: float) -> float:
    """Numeric bound on the queue norm for strictly feasible instances."""
    if constants.epsilon is None or constants.vbar_g is None:
        raise ConfigurationError("queue cap needs epsilon and vbar_g constants")
    F, G, R = constants.F, constants.G, constants.R
    eps, vbar = constants.epsilon, constants.vbar_g
    return gamma * F + (G * R + gamma**2 * eps * F + 2.0 * gamma**2 * F**2 + alpha * R**2) / (
        gamma * (eps - vbar)
    )


def preset_params(name: str, horizon: int, n: int, C: float) -> dict:
    """Parameter bundle for a named preset.

    Raw published values are kept under their original names; ``eta``/``mu``/
    ``lambda_init`` are the mapping onto the generic saddle-point update
    (an approximation, recorded in run metadata).
    """
    T = float(horizon)
    if name == "cao2018":
        eta = 2.0 / math.sqrt(T)
        return {"name": name, "delta": 8.0 * n * C * C + 1.0, "eta": eta, "mu": eta, "lambda_init": 0.0}
    if name == "chen2017":
        alpha = T ** (1.0 / 3.0)
        return {"name": name, "alpha": alpha, "mu": alpha, "eta": 1.0 / alpha, "lambda_init": 0.0}
    if name == "chen2018":
        lam1 = 4.0 * math.sqrt(2.0) * T ** (1.0 / 8.0)
        return {"name": name, "delta": 1.0, "lambda1": lam1, "eta": 1.0 / lam1, "mu": 1.0, "lambda_init": lam1}
    if name == "chen2019":
        mu = T ** (-0.5)
        alpha = 2.0 * T ** (-0.5)
        return {"name": name, "mu": mu, "alpha": alpha, "eta": alpha, "lambda_init": 0.0}
    if name in ("vqb_case1", "vqb_case2"):
        return {"name": name, "schedule": name.removeprefix("vqb_")}
    raise ConfigurationError(f"unknown preset {name!r}; expected one of {PRESET_NAMES}")


# ---------------------------------------------------------------------------
# virtual-queue learner


@dataclass(frozen=True, eq=False)
class VqbState:
    """State between rounds: the action for round t, the queue after its most
    recent update, and the inputs the next update will consume."""

    t: int
    x: np.ndarray
    lam: np.ndarray
    lam_prev: np.ndarray
    g_prev_at_x: np.ndarray
    gamma_prev: float
    path_len: float
    x_star_prev: Optional[np.ndarray]
    case: str
    constants: AssumptionConstants
    horizon: int


def vqb_init(
    constants: AssumptionConstants,
    horizon: int,
    chi_first: FeasibleSet,
    case: str = "case1",
    x0: Optional[np.ndarray] = None,
    n_constraints: int = 1,
) -> VqbState:
    if case not in ("case1", "case2"):
        raise ConfigurationError(f"unknown schedule case {case!r}")
    x = chi_first.project(np.zeros(chi_first.dim) if x0 is None else x0)
    zeros = np.zeros(n_constraints)
    return VqbState(
        t=1,
        x=x,
        lam=zeros,
        lam_prev=zeros,
        g_prev_at_x=zeros,
        gamma_prev=gamma_schedule(case, 0, constants.beta, constants.R),
        path_len=0.0,
        x_star_prev=None,
        case=case,
        constants=constants,
        horizon=int(horizon),
    )


def vqb_step(
    state: VqbState,
    loss: LossOracle,
    constraints: ConstraintOracle,
    chi_next: FeasibleSet,
    x_star: np.ndarray,
    cfg: SolverConfig = SolverConfig(),
) -> tuple[VqbState, StepRecord]:
    """One round: queue update, schedule evaluation, primal solve.

    The queue update consumes the previous round's constraint value at the
    current action; the primal solve minimizes over the next round's set so
    the emitted action is always feasible there.
    """
    t = state.t
    lam = vqb_dual_update(state.lam, state.gamma_prev, state.g_prev_at_x)

    inc = 0.0 if state.x_star_prev is None else float(np.linalg.norm(x_star - state.x_star_prev))
    path_len = state.path_len + inc
    alpha_t = alpha_schedule(t, state.horizon, state.constants.R, path_len)
    gamma_t = gamma_schedule(state.case, t, state.constants.beta, state.constants.R)

    dual_weight = lam + state.gamma_prev * state.g_prev_at_x
    spec = SubproblemSpec(
        anchor=state.x,
        loss_grad=loss.grad(state.x),
        dual_weight=dual_weight,
        gamma=gamma_t,
        alpha=alpha_t,
        constraints=constraints,
        set=chi_next,
    )
    try:
        sol = solve_primal_subproblem(spec, cfg)
    except Exception as exc:
        raise RuntimeError(f"primal update failed at round {t}") from exc

    record = StepRecord(
        t=t,
        x_next=sol.x,
        lam=lam,
        lam_prev=state.lam,
        dual_gamma=state.gamma_prev,
        dual_g=state.g_prev_at_x,
        alpha=alpha_t,
        gamma=gamma_t,
        residual=sol.residual,
    )
    new_state = replace(
        state,
        t=t + 1,
        x=sol.x,
        lam=lam,
        lam_prev=state.lam,
        g_prev_at_x=np.atleast_1d(constraints.eval(sol.x)),
        gamma_prev=gamma_t,
        path_len=path_len,
        x_star_prev=np.asarray(x_star, dtype=np.float64),
    )
    return new_state, record


class VqbLearner:
    """Virtual-queue learner; needs the true horizon for its schedules."""

    def __init__(
        self,
        constants: AssumptionConstants,
        horizon: int,
        chi_first: FeasibleSet,
        case: str = "case1",
        cfg: SolverConfig = SolverConfig(),
        n_constraints: int = 1,
    ):
        self._state = vqb_init(constants, horizon, chi_first, case, n_constraints=n_constraints)
        self._cfg = cfg
        self._chi = chi_first
        self.used_solver_minimizer = False

    def act(self) -> np.ndarray:
        return self._state.x

    def observe(self, t, loss, constraints, chi_next, minimizer=None) -> StepRecord:
        if minimizer is None:
            minimizer = per_slot_minimizer(loss, constraints, self._chi, self._cfg)
            self.used_solver_minimizer = True
        self._state, record = vqb_step(self._state, loss, constraints, chi_next, minimizer, self._cfg)
        self._chi = chi_next
        return record


# ---------------------------------------------------------------------------
# constant-parameter variant (strictly feasible instances)


@dataclass(frozen=True, eq=False)
class SlaterState:
    t: int
    x: np.ndarray
    lam: np.ndarray
    lam_prev: np.ndarray
    alpha: float
    gamma: float
    constants: AssumptionConstants


def slater_init(
    constants: AssumptionConstants,
    horizon: int,
    chi_first: FeasibleSet,
    a: float = 0.5,
    x0: Optional[np.ndarray] = None,
    n_constraints: int = 1,
) -> SlaterState:
    alpha, gamma = slater_params(a, horizon, constants.beta)
    x = chi_first.project(np.zeros(chi_first.dim) if x0 is None else x0)
    zeros = np.zeros(n_constraints)
    return SlaterState(t=1, x=x, lam=zeros, lam_prev=zeros, alpha=alpha, gamma=gamma, constants=constants)


def slater_step(
    state: SlaterState,
    loss: LossOracle,
    constraints: ConstraintOracle,
    chi_next: FeasibleSet,
    cfg: SolverConfig = SolverConfig(),
) -> tuple[SlaterState, StepRecord]:
    """One round of the constant-parameter variant.

    Both the queue update and the primal dual weight use the current round's
    constraint value at the current action.
    """
    t = state.t
    g_now = np.atleast_1d(constraints.eval(state.x))
    lam = slater_dual_update(state.lam, state.gamma, g_now)
    dual_weight = lam + state.gamma * g_now

    spec = SubproblemSpec(
        anchor=state.x,
        loss_grad=loss.grad(state.x),
        dual_weight=dual_weight,
        gamma=state.gamma,
        alpha=state.alpha,
        constraints=constraints,
        set=chi_next,
    )
    try:
        sol = solve_primal_subproblem(spec, cfg)
    except Exception as exc:
        raise RuntimeError(f"primal update failed at round {t}") from exc

    record = StepRecord(
        t=t,
        x_next=sol.x,
        lam=lam,
        lam_prev=state.lam,
        dual_gamma=state.gamma,
        dual_g=g_now,
        alpha=state.alpha,
        gamma=state.gamma,
        residual=sol.residual,
    )
    new_state = replace(state, t=t + 1, x=sol.x, lam=lam, lam_prev=state.lam)
    return new_state, record


class SlaterLearner:
    def __init__(
        self,
        constants: AssumptionConstants,
        horizon: int,
        chi_first: FeasibleSet,
        a: float = 0.5,
        cfg: SolverConfig = SolverConfig(),
        n_constraints: int = 1,
    ):
        self._state = slater_init(constants, horizon, chi_first, a, n_constraints=n_constraints)
        self._cfg = cfg

    @property
    def params(self) -> tuple[float, float]:
        return self._state.alpha, self._state.gamma

    def act(self) -> np.ndarray:
        return self._state.x

    def observe(self, t, loss, constraints, chi_next, minimizer=None) -> StepRecord:
        self._state, record = slater_step(self._state, loss, constraints, chi_next, self._cfg)
        return record


# ---------------------------------------------------------------------------
# generic online saddle-point baseline


@dataclass(frozen=True, eq=False)
class SaddleState:
    t: int
    x: np.ndarray
    lam: np.ndarray
    eta: float
    mu: float
    preset: str


def saddle_init(
    preset: dict,
    chi_first: FeasibleSet,
    x0: Optional[np.ndarray] = None,
    n_constraints: int = 1,
) -> SaddleState:
    x = chi_first.project(np.zeros(chi_first.dim) if x0 is None else x0)
    lam = np.full(n_constraints, float(preset.get("lambda_init", 0.0)))
    return SaddleState(t=1, x=x, lam=lam, eta=float(preset["eta"]), mu=float(preset["mu"]), preset=preset["name"])


def saddle_step(
    state: SaddleState,
    loss: LossOracle,
    constraints: ConstraintOracle,
    chi_next: FeasibleSet,
) -> tuple[SaddleState, StepRecord]:
    """Projected primal step on the Lagrangian, then positive-part dual step."""
    t = state.t
    jac = np.atleast_2d(constraints.jac(state.x))
    direction = np.asarray(loss.grad(state.x), dtype=np.float64) + jac.T @ state.lam
    x_next = chi_next.project(state.x - state.eta * direction)
    g_next = np.atleast_1d(constraints.eval(x_next))
    lam_next = np.maximum(state.lam + state.mu * g_next, 0.0)

    record = StepRecord(
        t=t,
        x_next=x_next,
        lam=lam_next,
        lam_prev=state.lam,
        dual_gamma=state.mu,
        dual_g=g_next,
        alpha=state.eta,
        gamma=state.mu,
        residual=0.0,
    )
    return replace(state, t=t + 1, x=x_next, lam=lam_next), record


class SaddleLearner:
    def __init__(self, preset: dict, chi_first: FeasibleSet, n_constraints: int = 1):
        self._state = saddle_init(preset, chi_first, n_constraints=n_constraints)

    def act(self) -> np.ndarray:
        return self._state.x

    def observe(self, t, loss, constraints, chi_next, minimizer=None) -> StepRecord:
        self._state, record = saddle_step(self._state, loss, constraints, chi_next)
        return record


# ---------------------------------------------------------------------------
# doubling trick for unknown horizons


def epoch_lengths(total_rounds: int) -> list[int]:
    """Epoch sizes 2, 4, 8, ... truncated to the realized horizon."""
    out = []
    remaining = int(total_rounds)
    i = 1
    while remaining > 0:
        size = min(2**i, remaining)
        out.append(size)
        remaining -= size
        i += 1
    return out


class DoublingLearner:
    """Restart an inner learner on epochs of doubling length.

    ``factory(epoch_horizon, chi_first)`` must build a fresh learner whose
    schedules are tuned for a horizon of ``epoch_horizon`` rounds; all inner
    state, including virtual queues, resets at each epoch boundary.
    """

    def __init__(self, factory: Callable[[int, FeasibleSet], object], chi_first: FeasibleSet):
        self._factory = factory
        self._epoch = 1
        self._inner = factory(2, chi_first)
        self._seen_in_epoch = 0
        self.used_solver_minimizer = False

    def act(self) -> np.ndarray:
        return self._inner.act()

    def observe(self, t, loss, constraints, chi_next, minimizer=None) -> StepRecord:
        local_t = self._seen_in_epoch + 1
        record = self._inner.observe(local_t, loss, constraints, chi_next, minimizer)
        if getattr(self._inner, "used_solver_minimizer", False):
            self.used_solver_minimizer = True
        self._seen_in_epoch += 1
        if self._seen_in_epoch == 2**self._epoch:
            self._epoch += 1
            self._inner = self._factory(2**self._epoch, chi_next)
            self._seen_in_epoch = 0
        return record
