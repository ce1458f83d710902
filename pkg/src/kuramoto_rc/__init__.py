"""Driven Kuramoto oscillator networks used as reservoir computers."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .dynamics import (
    InteractionSpec,
    ReservoirConfig,
    autonomous_field,
    driven_field,
    order_parameter,
    sample_frequencies,
)
from .errors import InvalidArgument, NumericalError
from .integrators import InputSampler, StepSchedule
from .pipeline import (
    ExperimentResult,
    TrainedReservoir,
    continue_closed_loop,
    nmse,
    ridge_solve,
    run_experiment,
)
from .readout import ReadoutSpec, ReadoutWeights, readout_features
from .tasks import SignalSeries

__all__ = [
    "BACKEND",
    "ExperimentResult",
    "InputSampler",
    "InteractionSpec",
    "InvalidArgument",
    "NumericalError",
    "ReadoutSpec",
    "ReadoutWeights",
    "ReservoirConfig",
    "SignalSeries",
    "StepSchedule",
    "TrainedReservoir",
    "autonomous_field",
    "continue_closed_loop",
    "driven_field",
    "nmse",
    "order_parameter",
    "readout_features",
    "ridge_solve",
    "run_experiment",
    "sample_frequencies",
]
