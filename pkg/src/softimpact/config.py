"""Run configuration: TOML parsing, fail-closed validation, defaults.

Every default that affects results is materialized into the resolved
config, which is what gets hashed into the run manifest; there are no
hidden parameters.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

SCENARIOS = ("wall_unitary", "wall_collapse", "two_particle")


class ConfigError(ValueError):
    """Invalid or unknown configuration content, with the offending key path."""


# section -> key -> (type, default); REQUIRED means "no default"
REQUIRED = object()

_SCHEMA: dict[str, dict[str, tuple[type, Any]]] = {
    "run": {
        "scenario": (str, REQUIRED),
        "seed": (int, REQUIRED),
        "dt": (float, 0.1),
        "n_steps": (int, 10000),
        "n_modes": (int, 150),
        "ensemble_size": (int, 1),
        "snapshot_stride": (int, 10),
        "store_snapshots": (bool, False),
        "deficit_threshold": (float, 1e-3),
    },
    "grid": {
        "x_min": (float, -30.0),
        "x_max": (float, 30.0),
        "n_points": (int, 1501),
    },
    "potential": {
        "kind": (str, "soft_impact"),
        "mass": (float, 1.0),
        "k1": (float, 1.0),
        "k2": (float, 10.0),
        "x_wall": (float, 5.0),
        "k": (float, 1.0),
        "center": (float, 0.0),
    },
    "initial": {
        "center": (float, -5.0),
        "sigma": (float, 1.0),
    },
    "wall_collapse": {
        "postulate": (int, REQUIRED),
        "r": (float, 0.5),
        "sigma_post": (float, 0.25),
        "wall_position": (float, None),  # defaults to potential.x_wall
        "refractory_steps": (int, 1),
        "location_sampling": (str, "full"),
        "threshold_mode": (str, "per_step"),
    },
    "two_particle": {
        "k1": (float, 1.0),
        "k2": (float, 1.0),
        "m1": (float, 1.0),
        "m2": (float, 1.0),
        "c1": (float, -2.0),
        "c2": (float, 2.0),
        "a0_1": (float, -5.0),
        "a0_2": (float, 5.0),
        "sigma0": (float, 1.0),
        "protocol": (str, "none"),
        "lambda": (float, 1.0),
        "sigma_choice": (str, "smaller"),
        "sampling_density": (str, "product"),
        "energy_match": (str, "grid"),
        "max_retries": (int, 16),
        "n_modes_1": (int, 0),  # 0 -> run.n_modes
        "n_modes_2": (int, 0),
    },
    "observables": {
        "wigner_times": (list, []),
        "wigner_p_count": (int, 400),
        "wigner_p_max": (float, 10.0),
        "wigner_x_stride": (int, 4),
    },
}

_SECTIONS_BY_SCENARIO = {
    "wall_unitary": ("run", "grid", "potential", "initial", "observables"),
    "wall_collapse": ("run", "grid", "potential", "initial", "wall_collapse", "observables"),
    "two_particle": ("run", "grid", "two_particle", "observables"),
}


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved configuration; `data` holds every effective value."""

    data: dict

    def __getitem__(self, section: str) -> dict:
        return self.data[section]

    @property
    def scenario(self) -> str:
        return self.data["run"]["scenario"]

    @property
    def seed(self) -> int:
        return self.data["run"]["seed"]

    @property
    def ensemble_size(self) -> int:
        return self.data["run"]["ensemble_size"]


def _coerce(section: str, key: str, want: type, value):
    if want is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if isinstance(value, bool) and want is not bool:
        raise ConfigError(f"{section}.{key}: expected {want.__name__}, got bool")
    if not isinstance(value, want):
        raise ConfigError(
            f"{section}.{key}: expected {want.__name__}, got {type(value).__name__}"
        )
    return value


def _validate(resolved: dict) -> None:
    run = resolved["run"]
    if run["scenario"] not in SCENARIOS:
        raise ConfigError(
            f"run.scenario: must be one of {SCENARIOS}, got {run['scenario']!r}"
        )
    if run["dt"] <= 0:
        raise ConfigError("run.dt: must be > 0")
    if run["n_steps"] < 1:
        raise ConfigError("run.n_steps: must be >= 1")
    if run["n_modes"] < 1:
        raise ConfigError("run.n_modes: must be >= 1")
    if run["ensemble_size"] < 1:
        raise ConfigError("run.ensemble_size: must be >= 1")
    if run["snapshot_stride"] < 1:
        raise ConfigError("run.snapshot_stride: must be >= 1")
    if not -(2**63) <= run["seed"] < 2**63:
        raise ConfigError("run.seed: must fit in 64 bits")

    if "grid" in resolved:
        g = resolved["grid"]
        if not g["x_min"] < g["x_max"]:
            raise ConfigError("grid: x_min must be < x_max")
        if g["n_points"] < 3:
            raise ConfigError("grid.n_points: must be >= 3")

    if "potential" in resolved:
        p = resolved["potential"]
        if p["kind"] not in ("soft_impact", "harmonic"):
            raise ConfigError(f"potential.kind: unknown kind {p['kind']!r}")
        if p["mass"] <= 0:
            raise ConfigError("potential.mass: must be > 0")

    if "wall_collapse" in resolved:
        w = resolved["wall_collapse"]
        if w["postulate"] not in (1, 2, 3, 4):
            raise ConfigError("wall_collapse.postulate: must be 1, 2, 3 or 4")
        if w["postulate"] in (1, 3) and not 0.0 < w["r"] < 1.0:
            raise ConfigError("wall_collapse.r: r must be in (0, 1)")
        if w["sigma_post"] <= 0:
            raise ConfigError("wall_collapse.sigma_post: must be > 0")
        if w["location_sampling"] not in ("full", "beyond_wall"):
            raise ConfigError("wall_collapse.location_sampling: full or beyond_wall")
        if w["threshold_mode"] not in ("per_step", "per_collapse", "per_run"):
            raise ConfigError(
                "wall_collapse.threshold_mode: per_step, per_collapse or per_run"
            )

    if "two_particle" in resolved:
        tp = resolved["two_particle"]
        for key in ("k1", "k2", "m1", "m2", "sigma0"):
            if tp[key] <= 0:
                raise ConfigError(f"two_particle.{key}: must be > 0")
        if tp["protocol"] not in ("none", "individual", "total"):
            raise ConfigError("two_particle.protocol: none, individual or total")
        if tp["lambda"] < 0:
            raise ConfigError("two_particle.lambda: must be >= 0")


def resolve_config(raw: dict) -> RunConfig:
    """Validate a parsed TOML document and fill in defaults."""
    if "run" not in raw or "scenario" not in raw.get("run", {}):
        required = "run.scenario, run.seed"
        raise ConfigError(f"missing required keys: {required}")
    scenario = raw["run"]["scenario"]
    if scenario not in SCENARIOS:
        raise ConfigError(f"run.scenario: must be one of {SCENARIOS}, got {scenario!r}")
    allowed_sections = _SECTIONS_BY_SCENARIO[scenario]

    for section in raw:
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        if section not in allowed_sections:
            raise ConfigError(
                f"section [{section}] does not apply to scenario {scenario!r}"
            )
        for key in raw[section]:
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown key {section}.{key}")

    resolved: dict[str, dict] = {}
    for section in allowed_sections:
        schema = _SCHEMA[section]
        src = raw.get(section, {})
        out = {}
        missing = []
        for key, (want, default) in schema.items():
            if key in src:
                out[key] = _coerce(section, key, want, src[key])
            elif default is REQUIRED:
                missing.append(f"{section}.{key}")
            else:
                out[key] = default
        if missing:
            raise ConfigError(f"missing required keys: {', '.join(missing)}")
        resolved[section] = out

    if "wall_collapse" in resolved and resolved["wall_collapse"]["wall_position"] is None:
        resolved["wall_collapse"]["wall_position"] = resolved["potential"]["x_wall"]

    _validate(resolved)
    return RunConfig(resolved)


def parse_config(text: str) -> RunConfig:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as err:
        raise ConfigError(f"malformed TOML: {err}")
    return resolve_config(raw)


def load_config(path: str | Path) -> RunConfig:
    return parse_config(Path(path).read_text())
