"""Tikhonov regularization in Hilbert scales for nonlinear ill-posed problems."""

from .errors import (DegenerateChoiceError, DegenerateGeneratorError, InvalidGridError,
                     InvalidIndicesError, InvalidParameterError, MagnitudeError,
                     TikhonovError, WrongModelError)
from .noise import Observation, make_observation, sample_white_noise, weak_pair
from .operators import ForwardProblem
from .rates import IndexFunction, RateFunction
from .scale import Grid, SpectralScale, build_scale_from_operator
from .solver import RegularizedSolution, SolveConfig, solve

__version__ = "0.1.0"
