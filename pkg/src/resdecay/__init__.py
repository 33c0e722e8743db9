"""Resonance-expansion dynamics of one and two decaying particles."""

from .config import ExperimentConfig, TimeGrid, preset
from .dynamics import Symmetry, density_series, psi_single, psi_two
from .model import BoxMode, DeltaShell, DoubleBarrier
from .poles import PoleSet, find_poles, load_pole_cache, save_pole_cache
from .specfun import faddeeva_w, moshinsky_m
from .states import Expansion, build_expansion, reconstruct_initial, sum_rule

__all__ = [
    "BoxMode",
    "DeltaShell",
    "DoubleBarrier",
    "ExperimentConfig",
    "Expansion",
    "PoleSet",
    "Symmetry",
    "TimeGrid",
    "build_expansion",
    "density_series",
    "faddeeva_w",
    "find_poles",
    "load_pole_cache",
    "moshinsky_m",
    "preset",
    "psi_single",
    "psi_two",
    "reconstruct_initial",
    "save_pole_cache",
    "sum_rule",
]

__version__ = "0.1.0"
