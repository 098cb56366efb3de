"""Software twin of a three-layer tactile unit that decouples temperature,
normal force and omnidirectional tangential force."""

from .calibration import (CalibrationGridSpec, CalibrationSet, fit_calibration,
                          generate_calibration, published_constants_calibration)
from .control import GripCommand, GripConfig, GripController, HandoverEvent, Phase
from .decoding import DecodedState, DecodeFlag, decode
from .physics import (CapacitorParams, HalbachParams, IonGelParams, RawSample,
                      SensorParams, TactileState, forward_sample)
from .piecewise import PiecewiseLinear, fit_piecewise_linear
from .scenarios import Scenario, Trace, gen_scenario, run_scenario

__all__ = [
    "CalibrationGridSpec", "CalibrationSet", "fit_calibration", "generate_calibration",
    "published_constants_calibration", "GripCommand", "GripConfig", "GripController",
    "HandoverEvent", "Phase", "DecodedState", "DecodeFlag", "decode", "CapacitorParams",
    "HalbachParams", "IonGelParams", "RawSample", "SensorParams", "TactileState",
    "forward_sample", "PiecewiseLinear", "fit_piecewise_linear", "Scenario", "Trace",
    "gen_scenario", "run_scenario",
]
