"""All-analog MIMO radio-over-copper fronthaul planning on 4-pair LAN cables."""

from .band_plan import McsProfile, ToneGrid, make_default_grid, target_sinr_db
from .cable_model import (
    CableCategory,
    CableSpec,
    ChannelMatrixSet,
    build_channel_matrices,
    fext_coupling_db,
    insertion_loss_db,
    load_calibration,
)
from .fext_comp import CompensationKind, CompensationMode, compensate
from .osb import PowerAllocation, PowerConstraints, per_tone_search, run_osb, sinr, solve_powers
from .planner import (
    AirLinkSpec,
    PlannerReport,
    map_antennas,
    max_antennas,
    plan_capacity,
    transparency_check,
    useful_bandwidth,
)
from .report import run_sweep
from .scenario import Scenario, parse_scenario

__version__ = "0.1.0"
