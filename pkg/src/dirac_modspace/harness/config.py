"""Experiment configuration: JSON loading, defaults and validation."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from ..dirac import PRESETS
from ..grid import Grid
from ..modspace import NormSpec

__all__ = ["ConfigError", "ExperimentConfig", "EXPERIMENTS", "load_config", "bundled_configs"]

EXPERIMENTS = (
    "free-bound",
    "free-decay",
    "quadratic-bound",
    "subquadratic-bound",
    "kernel-decay",
    "picard-compare",
    "transform-roundtrip",
)


class ConfigError(ValueError):
    """Invalid or missing experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description.

    ``solver`` and ``options`` carry experiment-specific knobs; see the
    bundled JSON files for the keys each experiment reads.
    """

    experiment: str
    grid: Grid
    clifford: str = "dirac1d"
    mass: float = 1.0
    potential: object = None
    norms: tuple = (NormSpec(),)
    T: float = 1.0
    ensemble_size: int = 1
    seed: int = 0
    window_width: float = 1.0
    solver: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)
    stability: bool = False
    source: str = ""

    @classmethod
    def from_dict(cls, cfg: dict, source: str = "") -> "ExperimentConfig":
        if not isinstance(cfg, dict):
            raise ConfigError("configuration must be a JSON object")
        exp = cfg.get("experiment")
        if exp not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {exp!r}; choose from {', '.join(EXPERIMENTS)}")
        try:
            grid = Grid.from_config(cfg["grid"])
        except KeyError as e:
            raise ConfigError(f"grid is missing key {e}") from None
        except (TypeError, ValueError) as e:
            raise ConfigError(f"bad grid: {e}") from None
        clifford = cfg.get("clifford", "dirac1d")
        if clifford not in PRESETS:
            raise ConfigError(f"unknown clifford preset {clifford!r}; choose from {sorted(PRESETS)}")
        if PRESETS[clifford](1.0).N != grid.N:
            raise ConfigError(f"preset {clifford} does not act in dimension N={grid.N}")
        try:
            norms = tuple(NormSpec.from_config(n) for n in cfg.get("norms", [{"p": 2, "q": 2}]))
        except (TypeError, ValueError) as e:
            raise ConfigError(f"bad norm specification: {e}") from None
        T = float(cfg.get("T", 1.0))
        if not (T > 0 and math.isfinite(T)):
            raise ConfigError(f"T must be positive, got {T}")
        ens = cfg.get("ensemble", {})
        size = int(ens.get("size", 1))
        if size < 1:
            raise ConfigError("ensemble size must be at least 1")
        mass = float(cfg.get("mass", 1.0))
        if mass < 0:
            raise ConfigError("mass must be nonnegative")
        return cls(
            experiment=exp,
            grid=grid,
            clifford=clifford,
            mass=mass,
            potential=cfg.get("potential"),
            norms=norms,
            T=T,
            ensemble_size=size,
            seed=int(ens.get("seed", 0)),
            window_width=float(cfg.get("window", {}).get("width", 1.0)),
            solver=dict(cfg.get("solver", {})),
            options=dict(cfg.get("options", {})),
            stability=bool(cfg.get("stability", False)),
            source=source,
        )


def bundled_configs() -> list[str]:
    root = resources.files("dirac_modspace.harness") / "configs"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".json"))


def _resolve(path: str) -> Path:
    p = Path(path)
    if p.is_file():
        return p
    candidate = resources.files("dirac_modspace.harness") / "configs" / p.name
    if candidate.is_file():
        return Path(str(candidate))
    raise ConfigError(f"configuration file {path!r} not found (bundled: {', '.join(bundled_configs())})")


def load_config(path: str) -> ExperimentConfig:
    """Load a config file, falling back to the bundled file of the same name."""
    p = _resolve(path)
    try:
        cfg = json.loads(p.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"{p}: invalid JSON ({e})") from None
    return ExperimentConfig.from_dict(cfg, source=str(p))
