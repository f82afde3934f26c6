"""Simulator for pinching-antenna indoor positioning and positioning-driven downlink."""

from .channel import ChannelConstants, NoiseModel, dbm_to_watt, watt_to_dbm
from .comms import RateReport, Tag, select_waveguide, serve, theoretical
from .geometry import PAPlacement, Room, UserPosition, Waveguide
from .positioning_mwmp import GridSearchConfig, PowerModel, dirichlet_factor, grid_search_locate, theoretical_power
from .positioning_mwsp import DegenerateGeometry, locate
from .scenario import Scenario, make_scenario, synthesize

__version__ = "0.1.0"

__all__ = [
    "ChannelConstants",
    "DegenerateGeometry",
    "GridSearchConfig",
    "NoiseModel",
    "PAPlacement",
    "PowerModel",
    "RateReport",
    "Room",
    "Scenario",
    "Tag",
    "UserPosition",
    "Waveguide",
    "dbm_to_watt",
    "dirichlet_factor",
    "grid_search_locate",
    "locate",
    "make_scenario",
    "select_waveguide",
    "serve",
    "synthesize",
    "theoretical",
    "theoretical_power",
    "watt_to_dbm",
]
