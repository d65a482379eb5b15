"""Space-frequency resource grid and QAM modulation profile."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

DEFAULT_TOTAL_BW_HZ = 500e6
DEFAULT_TONE_BW_HZ = 22e6
DEFAULT_N_PAIRS = 4
DEFAULT_GAP_DB = 8.0
DEFAULT_BITS = (0, 2, 4, 6, 8)
MAX_BITS = 8


@dataclass(frozen=True)
class ToneGrid:
    """FDM bins of equal width laid over every pair of the cable.

    Tone ``k`` occupies ``[k * tone_bandwidth_hz, (k + 1) * tone_bandwidth_hz)``.
    """

    n_pairs: int
    tone_bandwidth_hz: float
    total_bandwidth_hz: float
    tones_hz: np.ndarray = field(repr=False)

    @property
    def n_tones(self) -> int:
        return len(self.tones_hz)

    @property
    def n_resources(self) -> int:
        return self.n_tones * self.n_pairs

    def resources(self) -> list[tuple[int, int]]:
        """All (pair, tone) resources, tone-major."""
        return [(n, k) for k in range(self.n_tones) for n in range(self.n_pairs)]


def make_default_grid(
    total_bw_hz: float = DEFAULT_TOTAL_BW_HZ,
    tone_bw_hz: float = DEFAULT_TONE_BW_HZ,
    n_pairs: int = DEFAULT_N_PAIRS,
) -> ToneGrid:
    if not total_bw_hz > 0 or not tone_bw_hz > 0:
        raise ValueError(
            f"bandwidths must be positive, got total={total_bw_hz!r}, tone={tone_bw_hz!r}"
        )
    if int(n_pairs) != n_pairs or n_pairs < 1:
        raise ValueError(f"n_pairs must be a positive integer, got {n_pairs!r}")
    # leftover spectrum above n_tones * tone_bw_hz is left unused
    n_tones = math.floor(total_bw_hz / tone_bw_hz)
    tones = tone_bw_hz * (np.arange(n_tones) + 0.5)
    return ToneGrid(
        n_pairs=int(n_pairs),
        tone_bandwidth_hz=float(tone_bw_hz),
        total_bandwidth_hz=float(total_bw_hz),
        tones_hz=tones,
    )


def gap_target_db(bits: int, gap_db: float) -> float:
    """SNR-gap threshold for ``bits`` per symbol, ``-inf`` when off."""
    if bits == 0:
        return -math.inf
    return 10.0 * math.log10(2.0**bits - 1.0) + gap_db


@dataclass(frozen=True)
class McsProfile:
    """Ordered constellation ladder: ``bits[i]`` needs ``targets_db[i]`` SINR."""

    bits: tuple[int, ...]
    targets_db: tuple[float, ...]
    gap_db: float | None = None

    def __post_init__(self):
        if len(self.bits) != len(self.targets_db):
            raise ValueError("bits and targets_db differ in length")
        if not self.bits or self.bits[0] != 0 or self.targets_db[0] != -math.inf:
            raise ValueError("profile must start with the off entry (0 bits, -inf dB)")
        for b0, b1 in zip(self.bits, self.bits[1:]):
            if b1 <= b0:
                raise ValueError(f"bits must be strictly increasing, got {self.bits}")
        for g0, g1 in zip(self.targets_db, self.targets_db[1:]):
            if not g1 > g0:
                raise ValueError(
                    f"target SINRs must be strictly increasing, got {self.targets_db}"
                )
        if self.bits[-1] > MAX_BITS:
            raise ValueError(f"bits capped at {MAX_BITS} (256-QAM), got {self.bits[-1]}")
        if any(not math.isfinite(t) for t in self.targets_db[1:]):
            raise ValueError("targets of active entries must be finite")

    @classmethod
    def from_gap(cls, gap_db: float = DEFAULT_GAP_DB, bits=DEFAULT_BITS) -> "McsProfile":
        bits = tuple(int(b) for b in bits)
        if 0 not in bits:
            bits = (0,) + bits
        bits = tuple(sorted(bits))
        return cls(bits, tuple(gap_target_db(b, gap_db) for b in bits), gap_db)

    @classmethod
    def from_pairs(cls, pairs) -> "McsProfile":
        """Build from explicit ``(bits, target_db)`` pairs; the off entry is implied."""
        table = {0: -math.inf}
        for b, g in pairs:
            b = int(b)
            if b == 0:
                continue
            if b in table:
                raise ValueError(f"duplicate constellation entry for {b} bits")
            table[b] = float(g)
        bits = tuple(sorted(table))
        return cls(bits, tuple(table[b] for b in bits))

    @property
    def targets_linear(self) -> np.ndarray:
        return 10.0 ** (np.asarray(self.targets_db) / 10.0)

    def __len__(self) -> int:
        return len(self.bits)


def target_sinr_db(profile: McsProfile, bits: int) -> float:
    try:
        return profile.targets_db[profile.bits.index(bits)]
    except ValueError:
        raise ValueError(f"{bits} bits not in profile {profile.bits}") from None


DEFAULT_PROFILE = McsProfile.from_gap()
