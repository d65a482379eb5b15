"""Parametric insertion-loss / FEXT models for 4-pair LAN cables.

Insertion loss follows the structured-cabling limit-line form

    IL(f, L) = (k1 * sqrt(f) + k2 * f + k3 / sqrt(f)) * L / 100   [dB, f in MHz]

and pair-to-pair far-end crosstalk is the insertion loss plus an equal-level
FEXT loss that falls 20 dB/decade in frequency and 10 dB/decade in length.
The per-category constants live in a TOML calibration file
(``data/calibration.toml``); ``MIMOROC_CALIBRATION`` points to a replacement.
"""

from __future__ import annotations

import enum
import math
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .band_plan import ToneGrid

CALIBRATION_ENV = "MIMOROC_CALIBRATION"
F_MIN_MHZ = 1.0
F_MAX_MHZ = 500.0
REF_FREQ_MHZ = 100.0
REF_LENGTH_M = 100.0
DEFAULT_NOISE_PSD_DBM_HZ = -140.0
DEFAULT_MASK_PSD_DBM_HZ = -80.0
CALIBRATION_KEYS = ("k1", "k2", "k3", "elfext_ref_db")


class ModelValidityError(ValueError):
    """Frequency outside the calibrated range of the cable models."""


class CalibrationError(ValueError):
    """Malformed calibration file."""


class CableCategory(enum.Enum):
    CAT5 = "cat5"
    CAT6 = "cat6"
    CAT7 = "cat7"

    @classmethod
    def parse(cls, value) -> "CableCategory":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "").replace("_", "")
        for cat in cls:
            if cat.value == key:
                return cat
        raise ValueError(
            f"unknown cable category {value!r}; expected one of "
            + ", ".join(c.value for c in cls)
        )

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Calibration:
    k1: float
    k2: float
    k3: float
    elfext_ref_db: float

    @property
    def il_coeffs(self) -> tuple[float, float, float]:
        return (self.k1, self.k2, self.k3)


def _check_il_coeffs(k1, k2, k3):
    if min(k1, k2, k3) < 0:
        raise ValueError(f"IL coefficients must be nonnegative, got {(k1, k2, k3)}")
    # f**1.5 * dIL/df = k1*f/2 + k2*f**1.5 - k3/2 grows with f, so f=1 is the worst case
    if not k1 / 2 + k2 - k3 / 2 > 0:
        raise ValueError(
            f"IL coefficients {(k1, k2, k3)} do not give increasing loss above 1 MHz"
        )


def parse_calibration(text: str, source: str = "<string>") -> dict[CableCategory, Calibration]:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise CalibrationError(f"{source}: {exc}") from exc
    table = {}
    for name, record in doc.items():
        try:
            cat = CableCategory.parse(name)
        except ValueError:
            raise CalibrationError(f"{source}: unknown category key {name!r}") from None
        if not isinstance(record, dict):
            raise CalibrationError(f"{source}: {name!r} must be a table")
        for key in record:
            if key not in CALIBRATION_KEYS:
                raise CalibrationError(f"{source}: unknown key {name}.{key}")
        values = {}
        for key in CALIBRATION_KEYS:
            if key not in record:
                raise CalibrationError(f"{source}: missing key {name}.{key}")
            v = record[key]
            if isinstance(v, bool) or not isinstance(v, (int, float)) or math.isnan(v):
                raise CalibrationError(f"{source}: {name}.{key} is not a number: {v!r}")
            values[key] = float(v)
        try:
            _check_il_coeffs(values["k1"], values["k2"], values["k3"])
        except ValueError as exc:
            raise CalibrationError(f"{source}: {name}.k1/k2/k3: {exc}") from None
        table[cat] = Calibration(**values)
    missing = [c.value for c in CableCategory if c not in table]
    if missing:
        raise CalibrationError(f"{source}: missing categories {missing}")
    return table


def load_calibration(path: str | os.PathLike | None = None) -> dict[CableCategory, Calibration]:
    """Read the calibration table from ``path``, the env override, or the bundled default."""
    if path is None:
        path = os.environ.get(CALIBRATION_ENV) or None
    if path is None:
        ref = resources.files("mimoroc") / "data" / "calibration.toml"
        return parse_calibration(ref.read_text(encoding="utf-8"), "calibration.toml")
    path = Path(path)
    return parse_calibration(path.read_text(encoding="utf-8"), str(path))


@dataclass(frozen=True)
class CableSpec:
    category: CableCategory
    length_m: float
    il_coeffs: tuple[float, float, float]
    elfext_ref_db: float
    noise_psd_dbm_hz: float = DEFAULT_NOISE_PSD_DBM_HZ
    mask_psd_dbm_hz: float = DEFAULT_MASK_PSD_DBM_HZ

    def __post_init__(self):
        if not self.length_m > 0 or not math.isfinite(self.length_m):
            raise ValueError(f"length_m must be positive and finite, got {self.length_m!r}")
        _check_il_coeffs(*self.il_coeffs)
        if math.isnan(self.elfext_ref_db):
            raise ValueError("elfext_ref_db is NaN")
        if not self.noise_psd_dbm_hz < self.mask_psd_dbm_hz:
            raise ValueError(
                f"noise PSD {self.noise_psd_dbm_hz} dBm/Hz must lie below "
                f"the mask {self.mask_psd_dbm_hz} dBm/Hz"
            )

    @classmethod
    def from_category(cls, category, length_m: float, calibration=None, **kwargs) -> "CableSpec":
        category = CableCategory.parse(category)
        if calibration is None:
            calibration = load_calibration()
        cal = calibration[category]
        return cls(category, float(length_m), cal.il_coeffs, cal.elfext_ref_db, **kwargs)


def _check_freq(f_mhz):
    f = np.asarray(f_mhz, dtype=float)
    if np.any(~(f >= F_MIN_MHZ)) or np.any(~(f <= F_MAX_MHZ)):
        raise ModelValidityError(
            f"frequency {f_mhz!r} MHz outside the model range [{F_MIN_MHZ}, {F_MAX_MHZ}] MHz"
        )
    return f


def insertion_loss_db(spec: CableSpec, f_mhz):
    f = _check_freq(f_mhz)
    k1, k2, k3 = spec.il_coeffs
    il = (k1 * np.sqrt(f) + k2 * f + k3 / np.sqrt(f)) * (spec.length_m / REF_LENGTH_M)
    return float(il) if il.ndim == 0 else il


def elfext_db(spec: CableSpec, f_mhz):
    f = _check_freq(f_mhz)
    el = (
        spec.elfext_ref_db
        - 20.0 * np.log10(f / REF_FREQ_MHZ)
        - 10.0 * np.log10(spec.length_m / REF_LENGTH_M)
    )
    return float(el) if el.ndim == 0 else el


def fext_coupling_db(spec: CableSpec, f_mhz):
    """Pair-to-pair FEXT coupling loss (positive dB, larger means weaker)."""
    return insertion_loss_db(spec, f_mhz) + elfext_db(spec, f_mhz)


def noise_power_w(psd_dbm_hz: float, bandwidth_hz: float) -> float:
    return 10.0 ** ((psd_dbm_hz + 10.0 * math.log10(bandwidth_hz) - 30.0) / 10.0)


def dbm_to_w(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


def w_to_dbm(w):
    w = np.asarray(w, dtype=float)
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(w) + 30.0


@dataclass(frozen=True)
class ChannelMatrixSet:
    """Per-tone power-gain matrices ``gains[k, n, m] = |h_k^{n,m}|**2`` (m -> n)."""

    tones_hz: np.ndarray
    gains: np.ndarray
    noise_w: np.ndarray
    tone_bandwidth_hz: float = field(default=np.nan)

    def __post_init__(self):
        g = np.asarray(self.gains, dtype=float)
        if g.ndim != 3 or g.shape[1] != g.shape[2]:
            raise ValueError(f"gains must be (n_tones, n_pairs, n_pairs), got {g.shape}")
        if len(self.tones_hz) != g.shape[0] or np.shape(self.noise_w) != g.shape[:2]:
            raise ValueError("tones, gains and noise shapes disagree")

    @property
    def n_tones(self) -> int:
        return self.gains.shape[0]

    @property
    def n_pairs(self) -> int:
        return self.gains.shape[1]

    def direct_gains(self) -> np.ndarray:
        """(n_tones, n_pairs) diagonal gains."""
        return np.diagonal(self.gains, axis1=1, axis2=2).copy()


def build_channel_matrices(spec: CableSpec, grid: ToneGrid) -> ChannelMatrixSet:
    n_f, n_c = grid.n_tones, grid.n_pairs
    gains = np.zeros((n_f, n_c, n_c))
    if n_f:
        f_mhz = grid.tones_hz / 1e6
        direct = 10.0 ** (-np.atleast_1d(insertion_loss_db(spec, f_mhz)) / 10.0)
        if math.isinf(spec.elfext_ref_db) and spec.elfext_ref_db > 0:
            cross = np.zeros(n_f)
        else:
            cross = 10.0 ** (-np.atleast_1d(fext_coupling_db(spec, f_mhz)) / 10.0)
        gains[:] = cross[:, None, None]
        idx = np.arange(n_c)
        gains[:, idx, idx] = direct[:, None]
    sigma = noise_power_w(spec.noise_psd_dbm_hz, grid.tone_bandwidth_hz)
    return ChannelMatrixSet(
        tones_hz=grid.tones_hz.copy(),
        gains=gains,
        noise_w=np.full((n_f, n_c), sigma),
        tone_bandwidth_hz=grid.tone_bandwidth_hz,
    )
