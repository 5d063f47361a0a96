"""Two-population firing-rate model of ABAB tone streaming.

Simulation, analytic state classification, boundary curves and (PR, df) sweeps.
"""

from streamwave.model import Gain, ModelParams, NetState, RegimeFlags, validate_params
from streamwave.stimulus import Stimulus, df_to_d

__all__ = [
    "Gain",
    "ModelParams",
    "NetState",
    "RegimeFlags",
    "Stimulus",
    "df_to_d",
    "validate_params",
]

__version__ = "0.1.0"
