"""JSON run configuration shared by the command-line pipelines."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, ProfileError
from .profiles import RadialProfile
from .solver import FORMULATIONS, RunConfig, refine

_TOP_KEYS = {"p", "epsilon", "profiles", "grid", "t_final", "observers", "analysis", "solver", "sweep"}


@dataclass(frozen=True)
class AnalysisSettings:
    window_factor: float = 5.0
    n_terms: int = 2
    a_scale: float = 1.0


@dataclass(frozen=True)
class Config:
    """Deterministic description of a predict/evolve/analyze pipeline.

    ``epsilon`` is a tuple; single-run commands use its first entry and
    ``sweep`` runs all of them.  ``resolutions`` are N multipliers used by
    ``sweep``.
    """

    p: int = 3
    epsilon: tuple = (0.05,)
    f: RadialProfile = field(default_factory=RadialProfile.zero)
    g: RadialProfile = field(default_factory=RadialProfile)
    N: int = 8000
    cfl: float = 0.5
    r_max: float | None = None
    t_final: float = 100.0
    observers: tuple = (0.5, 1.0, 2.0)
    analysis: AnalysisSettings = field(default_factory=AnalysisSettings)
    formulation: str = "remainder"
    nonlinear: bool = True
    energy_every: int = 10
    resolutions: tuple = (1, 2, 4)

    @property
    def support_radius(self) -> float:
        return max(self.f.support_radius, self.g.support_radius)

    def run_config(self, epsilon: float | None = None, resolution_factor: float = 1) -> RunConfig:
        eps = self.epsilon[0] if epsilon is None else epsilon
        base = RunConfig(
            p=self.p, epsilon=eps, f=self.f, g=self.g, N=self.N, r_max=self.r_max,
            cfl=self.cfl, t_final=self.t_final, observers=self.observers,
            nonlinear=self.nonlinear, formulation=self.formulation,
            energy_every=self.energy_every,
        )
        if resolution_factor != 1:
            base = refine(base, resolution_factor)
        base.validate()
        return base

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "epsilon": list(self.epsilon),
            "profiles": {"f": self.f.to_dict(), "g": self.g.to_dict()},
            "grid": {"N": self.N, "cfl": self.cfl, "r_max": self.r_max},
            "t_final": self.t_final,
            "observers": list(self.observers),
            "analysis": {
                "window_factor": self.analysis.window_factor,
                "n_terms": self.analysis.n_terms,
                "a_scale": self.analysis.a_scale,
            },
            "solver": {
                "formulation": self.formulation,
                "nonlinear": self.nonlinear,
                "energy_every": self.energy_every,
            },
            "sweep": {"resolutions": list(self.resolutions)},
        }


def _number(d, key, default, kind=float, positive=False):
    val = d.get(key, default)
    if val is None:
        return None
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{key} must be a number")
    if kind is int and int(val) != val:
        raise ConfigError(f"{key} must be an integer")
    val = kind(val)
    if positive and not val > 0:
        raise ConfigError(f"{key} must be positive")
    return val


def _section(d, key):
    sec = d.get(key, {})
    if not isinstance(sec, dict):
        raise ConfigError(f"{key} must be an object")
    return sec


def parse_config(data: dict) -> Config:
    """Validate a config mapping and build a :class:`Config`."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    p = _number(data, "p", 3, int)
    if p < 3:
        raise ConfigError("p must be an integer >= 3")
    eps = data.get("epsilon", 0.05)
    eps_list = eps if isinstance(eps, list) else [eps]
    if not eps_list:
        raise ConfigError("epsilon list is empty")
    for e in eps_list:
        if isinstance(e, bool) or not isinstance(e, (int, float)) or e < 0:
            raise ConfigError("epsilon entries must be non-negative numbers")
    profiles = _section(data, "profiles")
    try:
        f = RadialProfile.from_dict(profiles.get("f", {"family": "zero", "amplitude": 0.0}))
        g = RadialProfile.from_dict(profiles.get("g", {}))
    except (ProfileError, TypeError) as exc:
        raise ConfigError(f"bad profile: {exc}") from exc
    grid = _section(data, "grid")
    analysis = _section(data, "analysis")
    solver = _section(data, "solver")
    sweep = _section(data, "sweep")
    observers = data.get("observers", [0.5, 1.0, 2.0])
    if not isinstance(observers, list) or not observers:
        raise ConfigError("observers must be a non-empty list")
    for r in observers:
        if isinstance(r, bool) or not isinstance(r, (int, float)) or r < 0:
            raise ConfigError("observer radii must be non-negative numbers")
    formulation = solver.get("formulation", "remainder")
    if formulation not in FORMULATIONS:
        raise ConfigError(f"solver.formulation must be one of {FORMULATIONS}")
    nonlinear = solver.get("nonlinear", True)
    if not isinstance(nonlinear, bool):
        raise ConfigError("solver.nonlinear must be a boolean")
    resolutions = sweep.get("resolutions", [1, 2, 4])
    if not isinstance(resolutions, list) or not resolutions:
        raise ConfigError("sweep.resolutions must be a non-empty list")
    window_factor = _number(analysis, "window_factor", 5.0)
    if window_factor < 3:
        raise ConfigError("analysis.window_factor must be >= 3")
    n_terms = _number(analysis, "n_terms", 2, int)
    if not 0 <= n_terms <= 2:
        raise ConfigError("analysis.n_terms must be 0, 1 or 2")
    cfg = Config(
        p=p,
        epsilon=tuple(float(e) for e in eps_list),
        f=f,
        g=g,
        N=_number(grid, "N", 8000, int, positive=True),
        cfl=_number(grid, "cfl", 0.5, positive=True),
        r_max=_number(grid, "r_max", None, positive=True),
        t_final=_number(data, "t_final", 100.0, positive=True),
        observers=tuple(float(r) for r in observers),
        analysis=AnalysisSettings(
            window_factor=window_factor,
            n_terms=n_terms,
            a_scale=_number(analysis, "a_scale", 1.0, positive=True),
        ),
        formulation=formulation,
        nonlinear=nonlinear,
        energy_every=_number(solver, "energy_every", 10, int, positive=True),
        resolutions=tuple(float(k) if int(k) != k else int(k) for k in resolutions),
    )
    if cfg.cfl > 1.0:
        raise ConfigError("grid.cfl must be <= 1")
    # causality and grid checks for every requested epsilon
    for e in cfg.epsilon:
        try:
            cfg.run_config(e)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    return cfg


def load_config(path) -> Config:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(data)


def save_config(cfg: Config, path) -> Path:
    path = Path(path)
    with open(path, "w") as fh:
        json.dump(cfg.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
