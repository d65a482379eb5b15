"""Scenario files: TOML describing one sweep of cable categories and lengths.

Every key is optional; an empty file is the reference Cat-5 / 100 m case.

=============================  ===============================  ==========
key                            meaning                          default
=============================  ===============================  ==========
``category``                   cable category or list of them   ``"cat5"``
``lengths``                    cable lengths in metres          ``[100]``
``compensation``               ``none|ideal|thp[:loss]`` or list ``"none"``
``total_bandwidth_mhz``        usable cable spectrum per pair   500
``tone_bandwidth_mhz``         FDM bin width                    22
``n_pairs``                    twisted pairs in the cable       4
``per_line_total_dbm``         amplifier budget per pair        4.0
``mask_psd_dbm_hz``            transmit PSD mask                -80
``noise_psd_dbm_hz``           cable noise PSD                  -140
``gap_db``                     SNR gap for the QAM ladder       8.0
``mcs``                        explicit ``"bits:target_db"``    (from gap)
``air_snr_db``                 air-link SNR per antenna         20
``n_antennas``                 antennas to map (0 = cable max)  0
``transparency_threshold_db``  allowed SINR degradation         3.0
``sweep_lengths``              lengths for antennas-vs-length   25..300/25
``output_dir``                 where CSVs are written           ``"out"``
=============================  ===============================  ==========
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .band_plan import DEFAULT_GAP_DB, McsProfile, ToneGrid, make_default_grid
from .cable_model import (
    DEFAULT_MASK_PSD_DBM_HZ,
    DEFAULT_NOISE_PSD_DBM_HZ,
    CableCategory,
)
from .fext_comp import CompensationMode
from .osb import PowerConstraints
from .planner import DEFAULT_AIR_SNR_DB, DEFAULT_TRANSPARENCY_DB

MAX_LENGTH_M = 500.0
DEFAULT_SWEEP_LENGTHS = tuple(float(x) for x in range(25, 301, 25))


class ScenarioError(ValueError):
    """Invalid scenario file content."""


@dataclass(frozen=True)
class Scenario:
    categories: tuple[CableCategory, ...] = (CableCategory.CAT5,)
    lengths_m: tuple[float, ...] = (100.0,)
    compensations: tuple[CompensationMode, ...] = (CompensationMode(),)
    total_bandwidth_hz: float = 500e6
    tone_bandwidth_hz: float = 22e6
    n_pairs: int = 4
    per_line_total_dbm: float = 4.0
    mask_psd_dbm_hz: float = DEFAULT_MASK_PSD_DBM_HZ
    noise_psd_dbm_hz: float = DEFAULT_NOISE_PSD_DBM_HZ
    mcs: McsProfile = field(default_factory=lambda: McsProfile.from_gap(DEFAULT_GAP_DB))
    air_snr_db: float = DEFAULT_AIR_SNR_DB
    n_antennas: int = 0
    transparency_threshold_db: float = DEFAULT_TRANSPARENCY_DB
    sweep_lengths_m: tuple[float, ...] = DEFAULT_SWEEP_LENGTHS
    output_dir: Path = Path("out")

    def grid(self) -> ToneGrid:
        return make_default_grid(self.total_bandwidth_hz, self.tone_bandwidth_hz, self.n_pairs)

    def constraints(self) -> PowerConstraints:
        return PowerConstraints.from_psd(
            self.per_line_total_dbm, self.mask_psd_dbm_hz, self.tone_bandwidth_hz
        )

    def points(self):
        """Sweep points in output order."""
        for cat in self.categories:
            for length in self.lengths_m:
                for comp in self.compensations:
                    yield cat, length, comp


def _number(doc, key, default, lo=-math.inf, hi=math.inf, lo_open=False):
    if key not in doc:
        return default
    v = doc[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ScenarioError(f"{key}: expected a finite number, got {v!r}")
    if (v <= lo if lo_open else v < lo) or v > hi:
        bound = f"({lo}, {hi}]" if lo_open else f"[{lo}, {hi}]"
        raise ScenarioError(f"{key} = {v!r} is outside {bound}")
    return float(v)


def _as_list(doc, key):
    v = doc[key]
    return list(v) if isinstance(v, list) else [v]


def _lengths(doc, key):
    out = []
    for v in _as_list(doc, key):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ScenarioError(f"{key}: expected numbers, got {v!r}")
        if not 0 < v <= MAX_LENGTH_M:
            raise ScenarioError(f"{key}: length {v!r} m is outside (0, {MAX_LENGTH_M:g}] m")
        out.append(float(v))
    if not out:
        raise ScenarioError(f"{key}: at least one length is required")
    return tuple(out)


def _mcs(entries):
    pairs = []
    for e in entries if isinstance(entries, list) else [entries]:
        try:
            if isinstance(e, str):
                b, g = e.split(":")
            else:
                b, g = e
            pairs.append((int(b), float(g)))
        except (TypeError, ValueError):
            raise ScenarioError(f"mcs: bad entry {e!r}, expected \"bits:target_db\"") from None
    try:
        return McsProfile.from_pairs(pairs)
    except ValueError as exc:
        raise ScenarioError(f"mcs: {exc}") from None


KNOWN_KEYS = {
    "category", "lengths", "length", "compensation", "total_bandwidth_mhz",
    "tone_bandwidth_mhz", "n_pairs", "per_line_total_dbm", "mask_psd_dbm_hz",
    "noise_psd_dbm_hz", "gap_db", "mcs", "air_snr_db", "n_antennas",
    "transparency_threshold_db", "sweep_lengths", "output_dir",
}


def scenario_from_dict(doc: dict) -> Scenario:
    for key in doc:
        if key not in KNOWN_KEYS:
            raise ScenarioError(f"unknown key {key!r}")
    kw = {}
    if "category" in doc:
        try:
            kw["categories"] = tuple(CableCategory.parse(c) for c in _as_list(doc, "category"))
        except ValueError as exc:
            raise ScenarioError(f"category: {exc}") from None
        if not kw["categories"]:
            raise ScenarioError("category: at least one category is required")
    if "lengths" in doc and "length" in doc:
        raise ScenarioError("give either 'length' or 'lengths', not both")
    for key in ("lengths", "length"):
        if key in doc:
            kw["lengths_m"] = _lengths(doc, key)
    if "sweep_lengths" in doc:
        kw["sweep_lengths_m"] = _lengths(doc, "sweep_lengths")
    if "compensation" in doc:
        try:
            kw["compensations"] = tuple(
                CompensationMode.parse(c) for c in _as_list(doc, "compensation")
            )
        except ValueError as exc:
            raise ScenarioError(f"compensation: {exc}") from None
        if not kw["compensations"]:
            raise ScenarioError("compensation: at least one mode is required")
    total = _number(doc, "total_bandwidth_mhz", 500.0, 0.0, 500.0, lo_open=True)
    tone = _number(doc, "tone_bandwidth_mhz", 22.0, 0.0, total, lo_open=True)
    kw["total_bandwidth_hz"] = total * 1e6
    kw["tone_bandwidth_hz"] = tone * 1e6
    if "n_pairs" in doc:
        n = doc["n_pairs"]
        if isinstance(n, bool) or not isinstance(n, int) or not 1 <= n <= 8:
            raise ScenarioError(f"n_pairs = {n!r} must be an integer in [1, 8]")
        kw["n_pairs"] = n
    kw["per_line_total_dbm"] = _number(doc, "per_line_total_dbm", 4.0, -60.0, 40.0)
    kw["mask_psd_dbm_hz"] = _number(doc, "mask_psd_dbm_hz", DEFAULT_MASK_PSD_DBM_HZ, -200.0, 0.0)
    kw["noise_psd_dbm_hz"] = _number(
        doc, "noise_psd_dbm_hz", DEFAULT_NOISE_PSD_DBM_HZ, -250.0, kw["mask_psd_dbm_hz"]
    )
    if kw["noise_psd_dbm_hz"] >= kw["mask_psd_dbm_hz"]:
        raise ScenarioError(
            f"noise_psd_dbm_hz = {kw['noise_psd_dbm_hz']} must be below "
            f"mask_psd_dbm_hz = {kw['mask_psd_dbm_hz']}"
        )
    if "mcs" in doc and "gap_db" in doc:
        raise ScenarioError("give either 'mcs' or 'gap_db', not both")
    if "mcs" in doc:
        kw["mcs"] = _mcs(doc["mcs"])
    else:
        kw["mcs"] = McsProfile.from_gap(_number(doc, "gap_db", DEFAULT_GAP_DB, 0.0, 30.0))
    kw["air_snr_db"] = _number(doc, "air_snr_db", DEFAULT_AIR_SNR_DB, -20.0, 80.0)
    if "n_antennas" in doc:
        n = doc["n_antennas"]
        if isinstance(n, bool) or not isinstance(n, int) or n < 0:
            raise ScenarioError(f"n_antennas = {n!r} must be a nonnegative integer")
        kw["n_antennas"] = n
    kw["transparency_threshold_db"] = _number(
        doc, "transparency_threshold_db", DEFAULT_TRANSPARENCY_DB, 0.0, 60.0
    )
    if "output_dir" in doc:
        if not isinstance(doc["output_dir"], str) or not doc["output_dir"]:
            raise ScenarioError(f"output_dir = {doc['output_dir']!r} must be a path string")
        kw["output_dir"] = Path(doc["output_dir"])
    return Scenario(**kw)


def parse_scenario(path) -> Scenario:
    """Read and validate a scenario file. Raises ``OSError`` or :class:`ScenarioError`."""
    path = Path(path)
    with path.open("rb") as fh:
        try:
            doc = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ScenarioError(f"{path}: {exc}") from None
    return scenario_from_dict(doc)
