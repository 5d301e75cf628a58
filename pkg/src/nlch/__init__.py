"""Desk-scale simulator for a non-local phase-field tumor-growth system.

Phase variable phi (tumor fraction), chemical potential mu with a viscous
relaxation term, and nutrient sigma coupled through a chemotaxis term.  The
potential is the singular single-well form with a piecewise quadratic
regularization; the interaction is a domain-restricted convolution.  Every
structural property the model comes with (mean confinement, max principles,
separation, energy stability, the quasi-static limit) is an executable
check here.
"""

from .grid import Field, Grid
from .kernel import DiscreteKernel, KernelSpec, build_kernel, check_A5
from .model import ModelParams, SourceSpec, eval_S, validate
from .potential import PotentialParams
from .solver import RunResult, SchemeConfig, State, StepError, run, step

__all__ = [
    "Field", "Grid", "DiscreteKernel", "KernelSpec", "build_kernel",
    "check_A5", "ModelParams", "SourceSpec", "eval_S", "validate",
    "PotentialParams", "RunResult", "SchemeConfig", "State", "StepError",
    "run", "step",
]

__version__ = "0.1.0"
