"""Experiment configuration: dataclasses, JSON round-trip and built-in presets.

A config file is a JSON object with the fields of :class:`ExperimentConfig`.
Starting from a preset, any field can be overridden, e.g.::

    {"preset": "fig4", "n_poles": 500, "out_dir": "runs/fig4_n500"}

Times are given in lifetime units (``t / tau`` with ``tau`` the lifetime of
the first pole); lengths and energies are in natural units ``hbar = 2m = 1``.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import BoxMode, DeltaShell, DoubleBarrier, PotentialSpec, spec_from_dict

__all__ = ["ConfigError", "TimeGrid", "ExperimentConfig", "PRESETS", "preset", "load_config"]

SYMMETRIES = ("single", "symmetric", "antisymmetric", "factorized")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class TimeGrid:
    """``points`` times from ``start`` to ``stop`` lifetimes, linear or log-spaced."""

    name: str
    kind: str = "linear"
    start: float = 0.05
    stop: float = 60.0
    points: int = 4000

    def validate(self):
        if self.kind not in ("linear", "log"):
            raise ConfigError(f"grid {self.name!r}: kind must be 'linear' or 'log'")
        if not 0 < self.start < self.stop <= 1e4:
            raise ConfigError(f"grid {self.name!r}: need 0 < start < stop <= 1e4 lifetimes")
        if self.points < 2:
            raise ConfigError(f"grid {self.name!r}: need at least 2 points")

    def times(self, tau: float) -> np.ndarray:
        if self.kind == "linear":
            return tau * np.linspace(self.start, self.stop, self.points)
        return tau * np.geomspace(self.start, self.stop, self.points)


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    potential: PotentialSpec
    states: dict
    symmetries: tuple = ("single",)
    positions: tuple = (3000.0,)
    grids: tuple = ()
    n_poles: int = 1000
    tail_completion: bool = True
    out_dir: str = "runs"
    cache_dir: str = "pole_cache"

    def validate(self) -> "ExperimentConfig":
        if not isinstance(self.potential, (DeltaShell, DoubleBarrier)):
            raise ConfigError("potential must be a delta shell or a double barrier")
        if int(self.n_poles) != self.n_poles or self.n_poles < 1:
            raise ConfigError(f"n_poles must be a positive integer, got {self.n_poles}")
        if not self.states or not set(self.states) <= {"alpha", "beta"}:
            raise ConfigError("states must map 'alpha' (and optionally 'beta') to box quantum numbers")
        for lab, q in self.states.items():
            if int(q) != q or q < 1:
                raise ConfigError(f"state {lab}: q must be a positive integer, got {q}")
        for sym in self.symmetries:
            if sym not in SYMMETRIES:
                raise ConfigError(f"unknown symmetry {sym!r}; choose from {SYMMETRIES}")
            if sym in ("symmetric", "antisymmetric"):
                if "beta" not in self.states or self.states["beta"] == self.states["alpha"]:
                    raise ConfigError(f"{sym} states need two different states alpha and beta")
        need = 1 if set(self.symmetries) == {"single"} else 2
        if len(self.positions) < need:
            raise ConfigError(f"symmetries {self.symmetries} need {need} positions")
        boundary = self.potential.boundary
        if any(x <= boundary for x in self.positions):
            raise ConfigError(f"positions must lie outside the interaction region (> {boundary})")
        if not self.grids:
            raise ConfigError("at least one time grid is required")
        names = [g.name for g in self.grids]
        if len(set(names)) != len(names):
            raise ConfigError("time grid names must be unique")
        for g in self.grids:
            g.validate()
        return self

    def box_states(self) -> dict:
        return {lab: BoxMode.for_spec(self.potential, int(q)) for lab, q in self.states.items()}

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["potential"] = self.potential.to_dict()
        d["symmetries"] = list(self.symmetries)
        d["positions"] = list(self.positions)
        d["grids"] = [dataclasses.asdict(g) for g in self.grids]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        base = {}
        if "preset" in d:
            base = preset(d.pop("preset")).to_dict()
        base.update(d)
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(base) - known
        if extra:
            raise ConfigError(f"unknown config fields {sorted(extra)}")
        try:
            pot = base["potential"]
            base["potential"] = pot if isinstance(pot, (DeltaShell, DoubleBarrier)) else spec_from_dict(pot)
            base["grids"] = tuple(g if isinstance(g, TimeGrid) else TimeGrid(**g) for g in base.get("grids", ()))
            base["symmetries"] = tuple(base.get("symmetries", ("single",)))
            base["positions"] = tuple(float(x) for x in base.get("positions", ()))
            base["states"] = {k: int(v) for k, v in base["states"].items()}
            cfg = cls(**base)
        except (KeyError, TypeError, ValueError) as err:
            if isinstance(err, ConfigError):
                raise
            raise ConfigError(f"invalid config: {err}") from err
        return cfg.validate()

    def replace(self, **kw) -> "ExperimentConfig":
        return dataclasses.replace(self, **kw).validate()


def _peak_and_tail(peak_stop: float, peak_points: int = 6000, tail_points: int = 1500):
    return (TimeGrid("peak", "linear", 0.05, peak_stop, peak_points),
            TimeGrid("tail", "log", 0.5, 1e4, tail_points))


def _presets() -> dict:
    ds = DeltaShell(lam=100.0, a=1.0)
    db = DoubleBarrier(V=40.0, b=1.0, w=1.0)
    r1 = 3000.0
    return {
        "fig1": ExperimentConfig("fig1", ds, {"alpha": 1}, ("single",), (r1,), _peak_and_tail(60.0), 1000),
        "fig2": ExperimentConfig("fig2", ds, {"alpha": 1, "beta": 6}, ("symmetric", "antisymmetric"),
                                 (2400.0, 15000.0), _peak_and_tail(60.0), 1000),
        "fig3": ExperimentConfig("fig3", ds, {"alpha": 1}, ("factorized",), (r1, 5 * r1),
                                 (TimeGrid("peak", "linear", 0.05, 60.0, 6000),), 1, tail_completion=False),
        "fig4": ExperimentConfig("fig4", ds, {"alpha": 1}, ("factorized",), (r1, 5 * r1),
                                 (TimeGrid("peak", "linear", 0.05, 60.0, 6000),), 1000),
        "fig5": ExperimentConfig("fig5", db, {"alpha": 1}, ("factorized",), (6e5, 3e6),
                                 (TimeGrid("peak", "linear", 0.05, 60.0, 6000),), 2, tail_completion=False),
        "fig6": ExperimentConfig("fig6", db, {"alpha": 1}, ("factorized",), (6e5, 3e6),
                                 (TimeGrid("peak", "linear", 0.05, 60.0, 6000),), 50),
    }


PRESETS = _presets()


def preset(name: str) -> ExperimentConfig:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def load_config(path) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    return ExperimentConfig.from_dict(data)
