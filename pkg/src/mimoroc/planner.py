"""Fronthaul transport capability of an allocated cable.

Turns a :class:`~mimoroc.osb.PowerAllocation` into per-pair useful bandwidth,
the number of air-link channels the cable can carry, an antenna-to-resource
mapping and the SINR cost of relaying each antenna over the cable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .band_plan import DEFAULT_TONE_BW_HZ, MAX_BITS, ToneGrid
from .cable_model import ChannelMatrixSet
from .osb import PowerAllocation, sinr_vector

DEFAULT_AIR_SNR_DB = 20.0
DEFAULT_TRANSPARENCY_DB = 3.0


class CapacityExceededError(ValueError):
    pass


@dataclass(frozen=True)
class AirLinkSpec:
    """Radio side of one RAU; ``air_snr_db`` is the received SNR per antenna."""

    n_users: int = 1
    n_antennas: int = 1
    air_snr_db: float = DEFAULT_AIR_SNR_DB
    air_bandwidth_hz: float = DEFAULT_TONE_BW_HZ

    def __post_init__(self):
        if self.n_antennas < 1 or self.n_users < 1:
            raise ValueError("need at least one user and one antenna")
        if not math.isfinite(self.air_snr_db):
            raise ValueError(f"air SNR must be finite, got {self.air_snr_db!r}")
        if not self.air_bandwidth_hz > 0:
            raise ValueError("air bandwidth must be positive")


@dataclass(frozen=True)
class AntennaAssignment:
    antenna: int
    pair: int
    tone: int
    bits: int


@dataclass
class PlannerReport:
    useful_bandwidth_hz: np.ndarray
    n_antennas_max: int
    rates_bps: np.ndarray
    line_power_dbm: np.ndarray
    qam256_bandwidth_hz: float
    mapping: list[AntennaAssignment] = field(default_factory=list)
    degradation_db: np.ndarray | None = None
    transparency_threshold_db: float = DEFAULT_TRANSPARENCY_DB

    @property
    def transparent(self) -> bool:
        """True when every mapped antenna stays within the degradation threshold."""
        if self.degradation_db is None:
            return True
        return bool(np.all(self.degradation_db <= self.transparency_threshold_db))


def _check_consistent(alloc: PowerAllocation, grid: ToneGrid):
    if alloc.bits.shape != (grid.n_tones, grid.n_pairs):
        raise ValueError(
            f"allocation shape {alloc.bits.shape} does not match grid "
            f"({grid.n_tones} tones x {grid.n_pairs} pairs)"
        )


def useful_bandwidth(alloc: PowerAllocation, grid: ToneGrid, pair: int) -> float:
    _check_consistent(alloc, grid)
    if not 0 <= pair < grid.n_pairs:
        raise IndexError(f"pair {pair} out of range 0..{grid.n_pairs - 1}")
    return grid.tone_bandwidth_hz * int(np.count_nonzero(alloc.bits[:, pair]))


def max_antennas(bandwidths_hz, air_bandwidth_hz: float) -> int:
    if not air_bandwidth_hz > 0:
        raise ValueError("air bandwidth must be positive")
    total = 0
    for b in bandwidths_hz:
        q = b / air_bandwidth_hz
        # guard count * width / width landing one ulp below an integer
        total += math.floor(q + 1e-12 * max(q, 1.0))
    return total


def qam256_bandwidth(alloc: PowerAllocation, max_bits: int = MAX_BITS) -> float:
    """Width of the lowest contiguous band where every pair runs ``max_bits``."""
    full = np.all(alloc.bits == max_bits, axis=1)
    n = int(np.argmin(full)) if not full.all() else len(full)
    return n * alloc.tone_bandwidth_hz


def map_antennas(n_antennas: int, alloc: PowerAllocation, grid: ToneGrid,
                 air_bandwidth_hz: float | None = None) -> list[AntennaAssignment]:
    """Greedy best-resource-first mapping: most bits first, then lower tone, then lower pair."""
    _check_consistent(alloc, grid)
    if n_antennas < 0:
        raise ValueError("negative antenna count")
    air_bw = grid.tone_bandwidth_hz if air_bandwidth_hz is None else air_bandwidth_hz
    bw = [useful_bandwidth(alloc, grid, n) for n in range(grid.n_pairs)]
    limit = max_antennas(bw, air_bw)
    active = [(k, n) for k, n in zip(*np.nonzero(alloc.bits))]
    limit = min(limit, len(active))
    if n_antennas > limit:
        raise CapacityExceededError(
            f"{n_antennas} antennas requested but the cable carries at most {limit} "
            f"(short by {n_antennas - limit})"
        )
    active.sort(key=lambda kn: (-alloc.bits[kn], kn[0], kn[1]))
    return [
        AntennaAssignment(a, int(n), int(k), int(alloc.bits[k, n]))
        for a, (k, n) in enumerate(active[:n_antennas])
    ]


def end_to_end_sinr(air_sinr, cable_sinr):
    """Amplify-and-forward cascade of the air link and the cable hop (linear)."""
    ga = np.asarray(air_sinr, dtype=float)
    gc = np.asarray(cable_sinr, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(np.isinf(gc), ga, ga * gc / (ga + gc + 1.0))
    return out


def degradation_db(air_sinr, cable_sinr):
    ga = np.asarray(air_sinr, dtype=float)
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(ga / end_to_end_sinr(ga, cable_sinr))


def cable_sinr(alloc: PowerAllocation, channels: ChannelMatrixSet) -> np.ndarray:
    """Achieved SINR on every (tone, pair) at the allocated powers."""
    return np.array([
        sinr_vector(channels.gains[k], alloc.powers_w[k], channels.noise_w[k])
        for k in range(alloc.n_tones)
    ]).reshape(alloc.bits.shape)


def transparency_check(air: AirLinkSpec, alloc: PowerAllocation, channels: ChannelMatrixSet,
                       mapping: list[AntennaAssignment]) -> np.ndarray:
    """Per-antenna SINR degradation (dB) caused by the cable hop."""
    mapped = {m.antenna: m for m in mapping}
    missing = [a for a in range(air.n_antennas) if a not in mapped]
    if missing:
        raise ValueError(f"antennas {missing} are not mapped onto the cable")
    gc = cable_sinr(alloc, channels)
    ga = 10.0 ** (air.air_snr_db / 10.0)
    return np.array([
        float(degradation_db(ga, gc[mapped[a].tone, mapped[a].pair]))
        for a in range(air.n_antennas)
    ])


def plan_capacity(alloc: PowerAllocation, grid: ToneGrid, channels: ChannelMatrixSet | None = None,
                  air: AirLinkSpec | None = None,
                  transparency_threshold_db: float = DEFAULT_TRANSPARENCY_DB) -> PlannerReport:
    """Full report; maps ``air.n_antennas`` (capped at the cable limit) when ``air`` is given."""
    _check_consistent(alloc, grid)
    air_bw = air.air_bandwidth_hz if air is not None else grid.tone_bandwidth_hz
    bw = np.array([useful_bandwidth(alloc, grid, n) for n in range(grid.n_pairs)])
    n_max = max_antennas(bw, air_bw)
    report = PlannerReport(
        useful_bandwidth_hz=bw,
        n_antennas_max=n_max,
        rates_bps=alloc.rates_bps,
        line_power_dbm=alloc.line_power_dbm,
        qam256_bandwidth_hz=qam256_bandwidth(alloc),
        transparency_threshold_db=transparency_threshold_db,
    )
    if air is not None:
        n_map = min(air.n_antennas, n_max, int(np.count_nonzero(alloc.bits)))
        report.mapping = map_antennas(n_map, alloc, grid, air_bw)
        if channels is not None and n_map:
            served = AirLinkSpec(air.n_users, n_map, air.air_snr_db, air.air_bandwidth_hz)
            report.degradation_db = transparency_check(served, alloc, channels, report.mapping)
    return report
