"""Monte Carlo simulation of a Bell-type test on one oscillator's position and momentum."""

from .kernels import BACKEND
from .oscillator import PhysicalConfig, GaussianState, ground_state, coherent_state, squeezed_state, evolve
from .bell import CountTable, correlation, chsh, ChshResult, CLASSICAL_BOUND, TSIRELSON_BOUND
from .experiment import ExperimentConfig, run_experiment, run_calibration

__version__ = "0.1.0"
