"""Evaluation: dynamic regret, cumulative constraint violations, the two
regularity measures (minimizer path length and constraint variation), and
log-log growth-rate fits for sublinearity checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .problem import ConfigurationError, LossOracle, ProblemInstance
from .subsolvers import estimate_sup_deviation

RESIDUAL_LIMIT = 1e-6


@dataclass(eq=False)
class Trajectory:
    """Per-round record of one run plus its metadata.

    ``lambda_norm[t-1]`` is the queue norm after round t's update, ``alpha``
    and ``gamma`` are the schedule values the round-t primal solve used, and
    ``residual`` its optimality certificate.
    """

    algorithm: str
    env: str
    seed: int
    horizon: int
    actions: np.ndarray  # (T, n)
    loss: np.ndarray  # (T,)
    gvals: np.ndarray  # (T, K)
    lambda_norm: np.ndarray
    alpha: np.ndarray
    gamma: np.ndarray
    residual: np.ndarray
    lam_final: np.ndarray  # (K,)
    minimizers: np.ndarray  # (T, n)
    comparator_loss: np.ndarray  # (T,)
    comparator_vio_max: float
    minimizer_mode: str  # "provided" or "solved"
    preset: Optional[str] = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        T = self.horizon
        for name in ("loss", "lambda_norm", "alpha", "gamma", "residual", "comparator_loss"):
            if getattr(self, name).shape[0] != T:
                raise ConfigurationError(f"{name} length != horizon {T}")
        if self.actions.shape[0] != T or self.gvals.shape[0] != T:
            raise ConfigurationError("actions/gvals length != horizon")

    @property
    def n_constraints(self) -> int:
        return self.gvals.shape[1]

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residual)) if self.residual.size else 0.0

    @property
    def within_residual_limit(self) -> bool:
        return self.max_residual <= RESIDUAL_LIMIT


def dynamic_regret(
    traj: Trajectory,
    minimizers: Optional[Sequence[np.ndarray]] = None,
    losses: Optional[Sequence[LossOracle]] = None,
) -> np.ndarray:
    """Cumulative loss gap against the per-round minimizers (may be negative).

    With no explicit comparator, the trajectory's recorded comparator losses
    are used; otherwise ``losses[t]`` is evaluated at ``minimizers[t]``.
    """
    if minimizers is None and losses is None:
        comparator = traj.comparator_loss
    else:
        if minimizers is None or losses is None or len(minimizers) != len(losses):
            raise ConfigurationError("minimizers and losses must be given together, equal length")
        if len(losses) != traj.horizon:
            raise ConfigurationError("comparator length != horizon")
        comparator = np.array([float(losses[i].eval(minimizers[i])) for i in range(len(losses))])
    return np.cumsum(traj.loss - comparator)


def violations(traj: Trajectory) -> np.ndarray:
    """Running componentwise sums of g_t(x_t); raw signed values, no clipping."""
    return np.cumsum(traj.gvals, axis=0)


def path_length(points: Sequence[np.ndarray]) -> float:
    """Total distance travelled by a sequence of points."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.shape[0] < 1:
        raise ConfigurationError("need at least one point")
    if pts.shape[0] == 1:
        return 0.0
    return float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))


def function_variation(instance: ProblemInstance, samples: int, seed: int) -> tuple[float, bool]:
    """Total constraint drift sum_{t>=2} sup_x ||g_t(x) - g_{t-1}(x)||.

    Returns ``(value, exact)``: the environment's closed-form per-round value
    when available (exact), otherwise a sampled lower bound with per-round
    streams derived from ``seed ^ t``.
    """
    total = 0.0
    if instance.sup_deviation_at is not None:
        for t in range(2, instance.horizon + 1):
            total += float(instance.sup_deviation_at(t))
        return total, True
    for t in range(2, instance.horizon + 1):
        total += estimate_sup_deviation(
            instance.constraints_at(t),
            instance.constraints_at(t - 1),
            instance.set_at(t),
            samples,
            seed ^ t,
        )
    return total, False


def growth_exponent(series: np.ndarray, window: tuple[int, int]) -> tuple[float, float]:
    """Least-squares slope of log(series[t]) vs log(t) over rounds [t_lo, t_hi].

    Returns ``(slope, shift)`` where ``shift`` is the constant added to make
    the windowed series positive (0 when it already is).
    """
    series = np.asarray(series, dtype=np.float64)
    t_lo, t_hi = int(window[0]), int(window[1])
    t_lo = max(t_lo, 1)
    t_hi = min(t_hi, series.shape[0])
    if t_hi - t_lo + 1 < 10:
        raise ConfigurationError("log-log window must cover at least 10 rounds")
    values = series[t_lo - 1 : t_hi]
    lowest = float(np.min(values))
    shift = 0.0 if lowest > 0.0 else -min(0.0, lowest) + 1.0
    y = np.log(values + shift)
    x = np.log(np.arange(t_lo, t_hi + 1, dtype=np.float64))
    slope = float(np.polyfit(x, y, 1)[0])
    return slope, shift


def queue_violation_bound(
    traj: Trajectory, v_g: float, g1_correction: bool = True
) -> tuple[np.ndarray, np.ndarray]:
    """Per-constraint (violation, bound) pair from the final queue state.

    The bound is ||lam(T)|| / gamma_T + V_g, plus the positive part of
    g_1(x_1) when ``g1_correction`` (the exact telescoped form; the correction
    vanishes on instances whose first action is feasible).
    """
    vio_final = violations(traj)[-1]
    base = float(np.linalg.norm(traj.lam_final)) / float(traj.gamma[-1]) + v_g
    corr = np.maximum(traj.gvals[0], 0.0) if g1_correction else 0.0
    return vio_final, base + corr


@dataclass(eq=False)
class MetricsReport:
    regret_cum: np.ndarray
    vio_cum: np.ndarray  # (T, K)
    regret_avg: np.ndarray
    vio_avg: np.ndarray
    v_x: float
    v_g: float
    vg_exact: bool
    growth_regret: Optional[float]
    growth_vio: Optional[float]
    regret_shift: float
    vio_shift: float
    comparator_vio_max: float

    @property
    def final_regret(self) -> float:
        return float(self.regret_cum[-1])

    @property
    def final_vio_max(self) -> float:
        return float(np.max(self.vio_cum[-1]))

    @property
    def final_vio_min(self) -> float:
        return float(np.min(self.vio_cum[-1]))


def compute_metrics(
    traj: Trajectory,
    instance: ProblemInstance,
    vg_samples: int = 256,
    vg_seed: int = 0,
    window_lo_frac: float = 0.25,
) -> MetricsReport:
    """Assemble the full report for one trajectory.

    Growth exponents are fitted on |cumulative regret| and on the positive
    part of the worst cumulative violation, over the window
    [window_lo_frac * T, T] to skip the initialization transient.
    """
    T = traj.horizon
    regret_cum = dynamic_regret(traj)
    vio_cum = violations(traj)
    rounds = np.arange(1, T + 1, dtype=np.float64)
    v_x = path_length(traj.minimizers)
    v_g, vg_exact = function_variation(instance, vg_samples, vg_seed)

    window = (max(1, int(T * window_lo_frac)), T)
    growth_regret = growth_vio = None
    regret_shift = vio_shift = 0.0
    if window[1] - window[0] + 1 >= 10:
        growth_regret, regret_shift = growth_exponent(np.abs(regret_cum), window)
        worst = vio_cum[:, int(np.argmax(vio_cum[-1]))]
        growth_vio, vio_shift = growth_exponent(np.maximum(worst, 0.0), window)

    return MetricsReport(
        regret_cum=regret_cum,
        vio_cum=vio_cum,
        regret_avg=regret_cum / rounds,
        vio_avg=vio_cum / rounds[:, None],
        v_x=v_x,
        v_g=v_g,
        vg_exact=vg_exact,
        growth_regret=growth_regret,
        growth_vio=growth_vio,
        regret_shift=regret_shift,
        vio_shift=vio_shift,
        comparator_vio_max=traj.comparator_vio_max,
    )
