"""Strategyproof facility location via randomly rotated coordinate-wise medians."""

__version__ = "0.1.0"

from .evaluation import EvalConfig, RatioEstimate, opt_value, ratio, scost
from .geometry import Rotation, rotate, sample_haar_rotation, substream
from .instances import InstanceRecipe, build
from .kernels import BACKEND
from .mechanisms import Kind, MechanismSpec, Outcome, replay, run
from .medians import Instance, cwmed, geometric_median, projection_median_estimate, rcwmed

__all__ = [
    "BACKEND",
    "EvalConfig",
    "Instance",
    "InstanceRecipe",
    "Kind",
    "MechanismSpec",
    "Outcome",
    "RatioEstimate",
    "Rotation",
    "build",
    "cwmed",
    "geometric_median",
    "opt_value",
    "projection_median_estimate",
    "ratio",
    "rcwmed",
    "replay",
    "rotate",
    "run",
    "sample_haar_rotation",
    "scost",
    "substream",
]
