"""Unsteady 2D incompressible flow simulation on masked staggered grids."""

from .analysis import dominant_frequency, sample_wind, strouhal
from .fileio import load_field, load_mask, save_field, save_mask
from .kernels import BACKEND, available_backends
from .solver import (
    FluidSolver,
    ForceHistory,
    InletSpec,
    TimeAveragedField,
    WindGrid,
    project,
    simulate,
    step,
)

__all__ = [
    "BACKEND",
    "FluidSolver",
    "ForceHistory",
    "InletSpec",
    "TimeAveragedField",
    "WindGrid",
    "available_backends",
    "dominant_frequency",
    "load_field",
    "load_mask",
    "project",
    "sample_wind",
    "save_field",
    "save_mask",
    "simulate",
    "step",
    "strouhal",
]
