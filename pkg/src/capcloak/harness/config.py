"""Experiment configuration: cells, budgets, grids, paths.

A YAML file (or CLI flags mirroring the same fields) fully determines a
run.  Every attack default can be overridden here, and the resolved
values are echoed into the run's provenance block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

import yaml

from ..attacks import (
    DEFAULT_ITERATIONS,
    METHODS,
    NORMS,
    AttackConfig,
    default_config,
)
from ..exceptions import ConfigError
from ..metrics.text import DEFAULT_THRESHOLD
from ..objectives import VARIANTS


@dataclass(frozen=True)
class CellSpec:
    """One (method, norm, variant) experiment cell."""

    method: str
    norm: str
    variant: str

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown attack method {self.method!r}")
        if self.norm not in NORMS:
            raise ConfigError(f"unknown norm {self.norm!r}")
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown loss variant {self.variant!r}")

    @property
    def cell_id(self):
        return f"{self.method}-{self.norm}-{self.variant}"

    @classmethod
    def parse(cls, text):
        """Parse 'method:norm:variant' (also accepts '-' separators)."""
        parts = text.replace("-", ":").split(":")
        if len(parts) != 3:
            raise ConfigError(
                f"cell {text!r} is not of the form method:norm:variant"
            )
        return cls(method=parts[0], norm=parts[1], variant=parts[2])

    def to_dict(self):
        return {"method": self.method, "norm": self.norm, "variant": self.variant}


def _as_cell(obj):
    if isinstance(obj, CellSpec):
        return obj
    if isinstance(obj, str):
        return CellSpec.parse(obj)
    if isinstance(obj, dict):
        return CellSpec(**obj)
    raise ConfigError(f"cannot interpret cell {obj!r}")


def _check_grid(grid, name):
    values = tuple(float(v) for v in grid)
    for v in values:
        if not math.isfinite(v):
            raise ConfigError(f"{name} contains a non-finite value")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ConfigError(f"{name} must be strictly increasing")
    return values


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a run needs; unset budgets fall back to the defaults."""

    manifest: str
    bundle: str = "stub"
    cells: tuple = (CellSpec("pgd", "linf", "cls"),)
    lambda1: float = 1.0
    lambda2: float = 1.0
    epsilon: float = None
    alpha: float = None
    iterations: int = None
    epsilon_grid: tuple = ()
    lambda1_grid: tuple = ()
    output_dir: str = "results"
    seed: int = 0
    threshold: float = DEFAULT_THRESHOLD
    wordvecs: str = None

    def __post_init__(self):
        cells = tuple(_as_cell(c) for c in self.cells)
        if not cells:
            raise ConfigError("at least one experiment cell is required")
        object.__setattr__(self, "cells", cells)
        object.__setattr__(
            self, "epsilon_grid", _check_grid(self.epsilon_grid, "epsilon_grid")
        )
        object.__setattr__(
            self, "lambda1_grid", _check_grid(self.lambda1_grid, "lambda1_grid")
        )

    def replace(self, **kw):
        return replace(self, **kw)

    def to_dict(self):
        d = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "cells":
                value = [c.to_dict() for c in value]
            elif isinstance(value, tuple):
                value = list(value)
            d[f.name] = value
        return d

    @classmethod
    def from_dict(cls, obj, base_dir=None):
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kw = dict(obj)
        if base_dir is not None:
            for key in ("manifest", "output_dir", "wordvecs"):
                if kw.get(key):
                    kw[key] = str((Path(base_dir) / kw[key]).resolve())
        return cls(**kw)

    @classmethod
    def from_yaml(cls, path):
        """Load a config file; relative paths resolve against the file."""
        path = Path(path)
        with open(path, "r", encoding="utf-8") as handle:
            obj = yaml.safe_load(handle)
        if not isinstance(obj, dict):
            raise ConfigError(f"config file {path} does not hold a mapping")
        return cls.from_dict(obj, base_dir=path.parent)

    def save_yaml(self, path):
        with open(path, "w", encoding="utf-8") as handle:
            yaml.safe_dump(self.to_dict(), handle, sort_keys=True)


def resolve_attack_config(config, cell):
    """AttackConfig for one cell: table defaults plus explicit overrides.

    Combinations outside the defaults table are allowed only when both
    epsilon and alpha are given explicitly.
    """
    overrides = {}
    if config.epsilon is not None:
        overrides["epsilon"] = config.epsilon
    if config.alpha is not None:
        overrides["alpha"] = config.alpha
    if config.iterations is not None and cell.method != "fgsm":
        overrides["iterations"] = config.iterations
    try:
        base = default_config(cell.method, cell.norm, cell.variant)
    except ConfigError:
        if "epsilon" not in overrides or "alpha" not in overrides:
            raise
        iterations = 1 if cell.method == "fgsm" else (
            overrides.get("iterations", DEFAULT_ITERATIONS)
        )
        return AttackConfig(
            method=cell.method, norm=cell.norm, epsilon=overrides["epsilon"],
            alpha=overrides["alpha"], iterations=iterations, seed=config.seed,
        )
    return replace(base, seed=config.seed, **overrides)
