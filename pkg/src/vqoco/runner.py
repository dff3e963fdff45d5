"""Experiment execution and deterministic CSV output.

One tuple = (algorithm, horizon, seed).  All algorithms sharing a
(horizon, seed) pair observe the identical generated instance; per-tuple
failures are isolated and reported without aborting the run.  Output bytes
are fully determined by the config: floats are printed with 17 significant
digits and rows are written in sorted tuple order.
"""

from __future__ import annotations

import os
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .config import AlgorithmSpec, ExperimentConfig
from .driver import rollout
from .environments import (
    JobSchedConfig,
    NetworkConfig,
    OrrConfig,
    jobsched_instance,
    network_instance,
    orr_generate,
    slater_instance,
)
from .learners import (
    DoublingLearner,
    SaddleLearner,
    SlaterLearner,
    VqbLearner,
    preset_params,
)
from .metrics import MetricsReport, Trajectory, compute_metrics
from .problem import ProblemInstance
from .subsolvers import SolverConfig

_MASK64 = (1 << 64) - 1


def mix64(*parts: int) -> int:
    """Combine integers into one 64-bit seed (splitmix64 finalizer chain).

    Used to derive per-tuple streams so adding an algorithm to a config never
    perturbs the streams of the others.
    """
    h = 0x9E3779B97F4A7C15
    for part in parts:
        h = (h ^ (int(part) & _MASK64)) & _MASK64
        h = (h * 0xBF58476D1CE4E5B9) & _MASK64
        h ^= h >> 30
        h = (h * 0x94D049BB133111EB) & _MASK64
        h ^= h >> 27
        h ^= h >> 31
    return h


def make_instance(cfg: ExperimentConfig, horizon: int, seed: int) -> ProblemInstance:
    params = dict(cfg.env_params)
    if cfg.env_type == "orr":
        return orr_generate(OrrConfig(horizon=horizon, seed=seed, **params))
    if cfg.env_type == "slater":
        return slater_instance(horizon, seed, **params)
    if cfg.env_type == "network":
        return network_instance(NetworkConfig(horizon=horizon, seed=seed, **params))
    if cfg.env_type == "jobsched":
        return jobsched_instance(JobSchedConfig(horizon=horizon, seed=seed, **params))
    raise ValueError(f"unknown environment type {cfg.env_type!r}")


def _n_constraints(instance: ProblemInstance) -> int:
    k = instance.metadata.get("n_constraints")
    if k is not None:
        return int(k)
    x = instance.set_at(1).project(np.zeros(instance.set_at(1).dim))
    return int(np.atleast_1d(instance.constraints_at(1).eval(x)).shape[0])


def make_learner(spec: AlgorithmSpec, instance: ProblemInstance, solver_cfg: SolverConfig):
    chi1 = instance.set_at(1)
    constants = instance.constants
    K = _n_constraints(instance)
    T = instance.horizon
    if spec.name in ("vqb_case1", "vqb_case2"):
        case = spec.name.removeprefix("vqb_")
        return VqbLearner(constants, T, chi1, case, solver_cfg, n_constraints=K)
    if spec.name in ("doubling_vqb_case1", "doubling_vqb_case2"):
        case = spec.name.removeprefix("doubling_vqb_")

        def factory(epoch_horizon, chi_first, case=case):
            return VqbLearner(constants, epoch_horizon, chi_first, case, solver_cfg, n_constraints=K)

        return DoublingLearner(factory, chi1)
    if spec.name == "slater":
        return SlaterLearner(constants, T, chi1, spec.a, solver_cfg, n_constraints=K)
    if spec.name == "saddle":
        meta_cfg = instance.metadata.get("config")
        n = getattr(meta_cfg, "n", chi1.dim)
        C = getattr(meta_cfg, "box_bound", constants.R / 2.0)
        bundle = preset_params(spec.preset, T, n, C)
        return SaddleLearner(bundle, chi1, n_constraints=K)
    raise ValueError(f"unknown algorithm {spec.name!r}")


@dataclass(frozen=True)
class RunKey:
    env: str
    algorithm: str
    horizon: int
    seed: int

    def as_tuple(self):
        return (self.env, self.algorithm, self.horizon, self.seed)


@dataclass(eq=False)
class RunResult:
    key: RunKey
    trajectory: Trajectory
    report: MetricsReport


@dataclass(frozen=True)
class RunFailure:
    key: RunKey
    error: str


@dataclass(eq=False)
class RunOutput:
    results: list
    failures: list

    @property
    def ok(self) -> bool:
        return not self.failures


def _run_group(cfg: ExperimentConfig, horizon: int, seed: int, specs) -> tuple[list, list]:
    results, failures = [], []
    instance = make_instance(cfg, horizon, seed)
    solver_cfg = SolverConfig(max_iters=cfg.solver_max_iters, tol=cfg.solver_tol)
    for idx, spec in specs:
        key = RunKey(env=cfg.env_type, algorithm=spec.label, horizon=horizon, seed=seed)
        try:
            learner = make_learner(spec, instance, solver_cfg)
            traj, _ = rollout(
                learner,
                instance,
                algorithm=spec.label,
                seed=seed,
                preset=spec.preset,
                solver_cfg=solver_cfg,
                metadata={"tuple_seed": mix64(seed, horizon, idx)},
            )
            report = compute_metrics(
                traj,
                instance,
                vg_samples=cfg.vg_samples,
                vg_seed=cfg.vg_seed,
                window_lo_frac=cfg.window_lo_frac,
            )
            results.append(RunResult(key=key, trajectory=traj, report=report))
        except Exception:
            failures.append(RunFailure(key=key, error=traceback.format_exc(limit=8)))
    return results, failures


def run_experiment(
    cfg: ExperimentConfig,
    jobs: int = 1,
    algo_filter: Optional[str] = None,
) -> RunOutput:
    """Execute the full (algorithm x horizon x seed) product."""
    specs = [
        (idx, spec)
        for idx, spec in enumerate(cfg.algorithms)
        if algo_filter is None or spec.label == algo_filter
    ]
    groups = [(T, s) for T in cfg.horizons for s in cfg.seeds]
    results: list = []
    failures: list = []
    if jobs <= 1 or len(groups) == 1:
        for T, s in groups:
            r, f = _run_group(cfg, T, s, specs)
            results.extend(r)
            failures.extend(f)
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_run_group, cfg, T, s, specs) for T, s in groups]
            for fut in futures:
                r, f = fut.result()
                results.extend(r)
                failures.extend(f)
    results.sort(key=lambda r: r.key.as_tuple())
    failures.sort(key=lambda f: f.key.as_tuple())
    return RunOutput(results=results, failures=failures)


# ---------------------------------------------------------------------------
# CSV output


def _fmt(value) -> str:
    return f"{float(value):.17g}"


def _traj_filename(key: RunKey) -> str:
    return f"{key.env}_{key.algorithm}_T{key.horizon}_seed{key.seed}.csv"


SUMMARY_COLUMNS = [
    "env",
    "algorithm",
    "horizon",
    "seed",
    "regret_final",
    "regret_avg_final",
    "vio_final_max",
    "vio_final_min",
    "v_x",
    "v_g",
    "vg_exact",
    "growth_regret",
    "growth_vio",
    "comparator_vio_max",
    "max_residual",
    "minimizer_mode",
]


def write_csv(results: list, outdir: str) -> list[str]:
    """One trajectory CSV per run plus summary.csv; returns written paths."""
    os.makedirs(outdir, exist_ok=True)
    paths = []
    for res in results:
        traj, rep = res.trajectory, res.report
        K = traj.n_constraints
        header = (
            ["t", "loss", "regret_cum", "regret_avg"]
            + [f"vio{k + 1}_cum" for k in range(K)]
            + ["lambda_norm", "alpha", "gamma", "residual"]
        )
        path = os.path.join(outdir, _traj_filename(res.key))
        with open(path, "w", newline="") as fh:
            fh.write(",".join(header) + "\n")
            for i in range(traj.horizon):
                row = [str(i + 1), _fmt(traj.loss[i]), _fmt(rep.regret_cum[i]), _fmt(rep.regret_avg[i])]
                row += [_fmt(rep.vio_cum[i, k]) for k in range(K)]
                row += [
                    _fmt(traj.lambda_norm[i]),
                    _fmt(traj.alpha[i]),
                    _fmt(traj.gamma[i]),
                    _fmt(traj.residual[i]),
                ]
                fh.write(",".join(row) + "\n")
        paths.append(path)

    summary_path = os.path.join(outdir, "summary.csv")
    with open(summary_path, "w", newline="") as fh:
        fh.write(",".join(SUMMARY_COLUMNS) + "\n")
        for res in results:
            traj, rep = res.trajectory, res.report
            row = [
                res.key.env,
                res.key.algorithm,
                str(res.key.horizon),
                str(res.key.seed),
                _fmt(rep.final_regret),
                _fmt(rep.regret_avg[-1]),
                _fmt(rep.final_vio_max),
                _fmt(rep.final_vio_min),
                _fmt(rep.v_x),
                _fmt(rep.v_g),
                "1" if rep.vg_exact else "0",
                "n/a" if rep.growth_regret is None else _fmt(rep.growth_regret),
                "n/a" if rep.growth_vio is None else _fmt(rep.growth_vio),
                _fmt(rep.comparator_vio_max),
                _fmt(traj.max_residual),
                traj.minimizer_mode,
            ]
            fh.write(",".join(row) + "\n")
    paths.append(summary_path)
    return paths


def summary_rows_from_results(results: list) -> list[dict]:
    rows = []
    for res in results:
        rep = res.trajectory, res.report
        traj, rep = res.trajectory, res.report
        rows.append(
            {
                "env": res.key.env,
                "algorithm": res.key.algorithm,
                "horizon": res.key.horizon,
                "seed": res.key.seed,
                "regret_avg_final": rep.regret_avg[-1],
                "vio_avg_final": rep.final_vio_max / traj.horizon,
                "growth_regret": rep.growth_regret,
                "growth_vio": rep.growth_vio,
            }
        )
    return rows


def load_summary_rows(path: str) -> list[dict]:
    rows = []
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        idx = {name: i for i, name in enumerate(header)}
        for line in fh:
            cells = line.strip().split(",")
            if len(cells) < len(header):
                continue

            def cell(name):
                return cells[idx[name]]

            def num(name):
                raw = cell(name)
                return None if raw == "n/a" else float(raw)

            rows.append(
                {
                    "env": cell("env"),
                    "algorithm": cell("algorithm"),
                    "horizon": int(cell("horizon")),
                    "seed": int(cell("seed")),
                    "regret_avg_final": float(cell("regret_avg_final")),
                    "vio_avg_final": float(cell("vio_final_max")) / int(cell("horizon")),
                    "growth_regret": num("growth_regret"),
                    "growth_vio": num("growth_vio"),
                }
            )
    return rows


def compare_table(rows: list[dict]) -> str:
    """Text table of per-algorithm aggregates, best (lowest) regret first;
    ties broken by algorithm name."""
    if not rows:
        raise ValueError("compare_table needs at least one result row")
    by_algo: dict[str, list[dict]] = {}
    for row in rows:
        by_algo.setdefault(row["algorithm"], []).append(row)

    def agg(values):
        vals = [v for v in values if v is not None]
        return (sum(vals) / len(vals)) if vals else None

    table = []
    for name, items in by_algo.items():
        regret = agg(r["regret_avg_final"] for r in items)
        vio = agg(r["vio_avg_final"] for r in items)
        g_r = agg(r["growth_regret"] for r in items)
        g_v = agg(r["growth_vio"] for r in items)
        table.append((regret, name, vio, g_r, g_v, len(items)))
    table.sort(key=lambda row: (row[0], row[1]))

    def show(v):
        return "n/a" if v is None else f"{v:.6g}"

    lines = [
        f"{'algorithm':<28} {'runs':>4} {'regret(T)/T':>14} {'max_vio(T)/T':>14} "
        f"{'exp(regret)':>12} {'exp(vio)':>12}"
    ]
    for regret, name, vio, g_r, g_v, count in table:
        lines.append(
            f"{name:<28} {count:>4} {show(regret):>14} {show(vio):>14} {show(g_r):>12} {show(g_v):>12}"
        )
    return "\n".join(lines)
