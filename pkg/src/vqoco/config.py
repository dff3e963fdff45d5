"""Experiment config files: a line-oriented sectioned key=value format.

Sections are bracketed headers; one assignment per line; ``#`` or ``;`` start
comments.  ``[experiment]`` and ``[environment]`` appear once, ``[algorithm]``
once per learner.  Parsing validates everything and reports the full list of
errors with line numbers, not just the first.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

ALGORITHM_NAMES = (
    "vqb_case1",
    "vqb_case2",
    "doubling_vqb_case1",
    "doubling_vqb_case2",
    "slater",
    "saddle",
)
SADDLE_PRESETS = ("cao2018", "chen2017", "chen2018", "chen2019")
ENV_TYPES = ("orr", "slater", "network", "jobsched")


class ConfigParseError(ValueError):
    """Carries every validation error found in a config file."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


@dataclass(frozen=True)
class AlgorithmSpec:
    name: str
    preset: Optional[str] = None
    a: float = 0.5  # exponent for the constant-parameter learner

    @property
    def label(self) -> str:
        return f"{self.name}_{self.preset}" if self.preset else self.name


@dataclass(frozen=True)
class ExperimentConfig:
    env_type: str
    env_params: dict
    algorithms: tuple
    horizons: tuple
    seeds: tuple
    output: str = "results"
    vg_samples: int = 256
    vg_seed: int = 0
    window_lo_frac: float = 0.25
    solver_max_iters: int = 500
    solver_tol: float = 1e-8


def _parse_scalar(kind, raw: str):
    if kind is bool:
        low = raw.lower()
        if low in ("true", "1", "yes"):
            return True
        if low in ("false", "0", "no"):
            return False
        raise ValueError(f"expected boolean, got {raw!r}")
    return kind(raw)


def _parse_list(kind, raw: str):
    items = raw.replace(",", " ").split()
    if not items:
        raise ValueError("empty list")
    return tuple(_parse_scalar(kind, item) for item in items)


# key -> (type, is_list); environment tables are per type
_EXPERIMENT_KEYS = {
    "horizons": (int, True),
    "seeds": (int, True),
    "output": (str, False),
    "vg_samples": (int, False),
    "vg_seed": (int, False),
    "window_lo_frac": (float, False),
    "solver_max_iters": (int, False),
    "solver_tol": (float, False),
}
_ENV_KEYS = {
    "orr": {
        "n": int,
        "k": int,
        "box_bound": float,
        "intercept": float,
        "drift": str,
    },
    "slater": {"eps": float, "drift_cap": float, "loss_scale": float},
    "network": {
        "n_mapping": int,
        "n_centers": int,
        "bandwidth": float,
        "capacity": float,
        "arrival_base": float,
        "arrival_amplitude": float,
        "arrival_period": float,
        "arrival_noise": float,
    },
    "jobsched": {
        "n_servers": int,
        "n_jobs": int,
        "norm_order": int,
        "min_cores": int,
        "max_cores": int,
        "max_duration": int,
    },
}
_ALGO_KEYS = {"name": str, "preset": str, "a": float}


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate; raises ConfigParseError listing every problem."""
    errors: list[str] = []
    section = None
    seen_sections: set[str] = set()
    experiment: dict = {}
    environment: dict = {}
    env_line = 0
    algorithms: list[dict] = []

    def err(lineno: int, message: str) -> None:
        errors.append(f"line {lineno}: {message}")

    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].split(";", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip().lower()
            if name not in ("experiment", "environment", "algorithm"):
                err(lineno, f"unknown section [{name}]")
                section = None
                continue
            if name in ("experiment", "environment") and name in seen_sections:
                err(lineno, f"duplicate section [{name}]")
            seen_sections.add(name)
            section = name
            if name == "algorithm":
                algorithms.append({"_line": lineno})
            if name == "environment":
                env_line = lineno
            continue
        if "=" not in line:
            err(lineno, f"expected 'key = value', got {line!r}")
            continue
        key, _, value = line.partition("=")
        key = key.strip().lower()
        value = value.strip()
        if section is None:
            err(lineno, f"assignment {key!r} outside any section")
            continue
        if section == "experiment":
            spec = _EXPERIMENT_KEYS.get(key)
            if spec is None:
                err(lineno, f"unknown key {key!r} in [experiment]")
                continue
            kind, is_list = spec
            try:
                experiment[key] = _parse_list(kind, value) if is_list else _parse_scalar(kind, value)
            except ValueError as exc:
                err(lineno, f"bad value for {key!r}: {exc}")
        elif section == "environment":
            environment[key] = (value, lineno)
        else:
            algo = algorithms[-1]
            if key not in _ALGO_KEYS:
                err(lineno, f"unknown key {key!r} in [algorithm]")
                continue
            try:
                algo[key] = _parse_scalar(_ALGO_KEYS[key], value)
            except ValueError as exc:
                err(lineno, f"bad value for {key!r}: {exc}")

    # -- environment block
    env_type = None
    env_params: dict = {}
    if "environment" not in seen_sections:
        errors.append("missing [environment] section")
    else:
        raw_type = environment.pop("type", None)
        if raw_type is None:
            err(env_line, "environment needs a 'type' key")
        else:
            env_type = raw_type[0].lower()
            if env_type not in ENV_TYPES:
                err(raw_type[1], f"unknown environment type {env_type!r}; expected one of {ENV_TYPES}")
                env_type = None
        if env_type is not None:
            table = _ENV_KEYS[env_type]
            for key, (value, lineno) in environment.items():
                if key not in table:
                    err(lineno, f"unknown key {key!r} for environment {env_type!r}")
                    continue
                try:
                    env_params[key] = _parse_scalar(table[key], value)
                except ValueError as exc:
                    err(lineno, f"bad value for {key!r}: {exc}")
            if env_type == "orr" and env_params.get("drift") not in (None, "log", "sqrt"):
                errors.append(f"environment drift must be 'log' or 'sqrt', got {env_params['drift']!r}")

    # -- experiment block
    horizons = experiment.get("horizons", ())
    seeds = experiment.get("seeds", ())
    if "experiment" not in seen_sections:
        errors.append("missing [experiment] section")
    else:
        if not horizons:
            errors.append("at least one horizon required (key 'horizons' in [experiment])")
        if not seeds:
            errors.append("at least one seed required (key 'seeds' in [experiment])")
    for T in horizons:
        if T < 1:
            errors.append(f"horizon must be >= 1, got {T}")
    frac = experiment.get("window_lo_frac", 0.25)
    if not 0.0 < frac < 1.0:
        errors.append(f"window_lo_frac must be in (0, 1), got {frac}")
    if experiment.get("vg_samples", 256) < 1:
        errors.append("vg_samples must be >= 1")

    # -- algorithms
    specs: list[AlgorithmSpec] = []
    if not algorithms:
        errors.append("at least one [algorithm] section required")
    for algo in algorithms:
        lineno = algo["_line"]
        name = algo.get("name")
        if name is None:
            err(lineno, "[algorithm] needs a 'name' key")
            continue
        if name not in ALGORITHM_NAMES:
            err(lineno, f"unknown algorithm {name!r}; expected one of {ALGORITHM_NAMES}")
            continue
        preset = algo.get("preset")
        if name == "saddle":
            if preset is None:
                err(lineno, "saddle needs a 'preset' key")
                continue
            if preset not in SADDLE_PRESETS:
                err(lineno, f"unknown preset {preset!r}; expected one of {SADDLE_PRESETS}")
                continue
        elif preset is not None:
            err(lineno, f"'preset' only applies to the saddle baseline, not {name!r}")
            continue
        a = algo.get("a", 0.5)
        if not 0.0 < a < 1.0:
            err(lineno, f"exponent a must be in (0, 1), got {a}")
            continue
        specs.append(AlgorithmSpec(name=name, preset=preset, a=a))

    if errors:
        raise ConfigParseError(errors)

    return ExperimentConfig(
        env_type=env_type,
        env_params=env_params,
        algorithms=tuple(specs),
        horizons=tuple(horizons),
        seeds=tuple(seeds),
        output=experiment.get("output", "results"),
        vg_samples=experiment.get("vg_samples", 256),
        vg_seed=experiment.get("vg_seed", 0),
        window_lo_frac=frac,
        solver_max_iters=experiment.get("solver_max_iters", 500),
        solver_tol=experiment.get("solver_tol", 1e-8),
    )
