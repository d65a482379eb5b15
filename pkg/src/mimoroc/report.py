"""Sweep orchestration and CSV emission."""

from __future__ import annotations

import csv
import logging
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cable_model import CableCategory, CableSpec, build_channel_matrices, load_calibration, w_to_dbm
from .fext_comp import CompensationMode, compensate
from .osb import PowerAllocation, run_osb
from .planner import AirLinkSpec, PlannerReport, plan_capacity
from .scenario import Scenario

log = logging.getLogger(__name__)

SUMMARY_COLUMNS = ["category", "length_m", "compensation", "pair", "B_c_Hz", "R_bps",
                   "P_line_dBm", "N_a_max"]
SPECTRUM_COLUMNS = ["f_center_hz", "pair", "bits", "power_dbm"]
ANTENNAS_COLUMNS = ["category", "compensation", "length_m", "N_a_max"]
SWEEP_MIN_M = 25.0
SWEEP_MAX_M = 300.0


@dataclass
class PointResult:
    category: CableCategory
    length_m: float
    compensation: CompensationMode
    allocation: PowerAllocation
    report: PlannerReport


def _fmt(x: float, digits: int = 4) -> str:
    if math.isinf(x):
        return "-inf" if x < 0 else "inf"
    return f"{x:.{digits}f}"


def _length_tag(length_m: float) -> str:
    return f"{length_m:g}"


def spectrum_filename(category, length_m, compensation) -> str:
    comp = str(compensation).replace(":", "-")
    return f"spectrum_{category}_{_length_tag(length_m)}m_{comp}.csv"


def evaluate_point(scenario: Scenario, category, length_m: float,
                   compensation: CompensationMode, calibration=None) -> PointResult:
    spec = CableSpec.from_category(
        category, length_m, calibration,
        noise_psd_dbm_hz=scenario.noise_psd_dbm_hz,
        mask_psd_dbm_hz=scenario.mask_psd_dbm_hz,
    )
    grid = scenario.grid()
    channels = compensate(build_channel_matrices(spec, grid), compensation)
    alloc = run_osb(channels, scenario.mcs, scenario.constraints())
    if not alloc.converged:
        log.warning("%s %g m %s: dual search did not converge", category, length_m, compensation)
    n_ant = scenario.n_antennas or grid.n_resources
    air = AirLinkSpec(n_antennas=max(n_ant, 1), air_snr_db=scenario.air_snr_db,
                      air_bandwidth_hz=scenario.tone_bandwidth_hz)
    report = plan_capacity(alloc, grid, channels, air, scenario.transparency_threshold_db)
    return PointResult(spec.category, length_m, compensation, alloc, report)


def sweep_lengths(scenario: Scenario, points: int | None = None) -> tuple[float, ...]:
    """Lengths for the antennas-vs-length table; ``points`` spreads them evenly over 25..300 m."""
    if points is None:
        return scenario.sweep_lengths_m
    if points < 1:
        raise ValueError(f"--points must be >= 1, got {points}")
    if points == 1:
        return (SWEEP_MIN_M,)
    return tuple(float(round(x, 6)) for x in np.linspace(SWEEP_MIN_M, SWEEP_MAX_M, points))


def _open_csv(path: Path):
    return path.open("w", encoding="utf-8", newline="")


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def check_writable(out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    if not os.access(out_dir, os.W_OK | os.X_OK):
        raise PermissionError(f"output directory {out_dir} is not writable")
    probe = out_dir / ".mimoroc-write-test"
    probe.write_text("")
    probe.unlink()


def write_spectrum(path: Path, result: PointResult) -> None:
    alloc = result.allocation
    power_dbm = w_to_dbm(alloc.powers_w)
    with _open_csv(path) as fh:
        w = _writer(fh)
        w.writerow(SPECTRUM_COLUMNS)
        for k in range(alloc.n_tones):
            for n in range(alloc.n_pairs):
                w.writerow([f"{alloc.tones_hz[k]:.0f}", n, int(alloc.bits[k, n]),
                            _fmt(float(power_dbm[k, n]))])


def run_sweep(scenario: Scenario, out_dir=None, points: int | None = None,
              calibration=None, progress=None) -> list[PointResult]:
    """Evaluate every sweep point and write ``summary.csv``, ``spectrum_*.csv`` and
    ``antennas_vs_length.csv`` to ``out_dir`` (default: the scenario's output_dir)."""
    out_dir = Path(out_dir) if out_dir is not None else scenario.output_dir
    lengths = sweep_lengths(scenario, points)
    check_writable(out_dir)
    if calibration is None:
        calibration = load_calibration()

    results = []
    for cat, length, comp in scenario.points():
        res = evaluate_point(scenario, cat, length, comp, calibration)
        results.append(res)
        if progress:
            progress(f"{cat} {_length_tag(length)} m {comp}: "
                     f"N_a,max={res.report.n_antennas_max}")

    with _open_csv(out_dir / "summary.csv") as fh:
        w = _writer(fh)
        w.writerow(SUMMARY_COLUMNS)
        for res in results:
            rep = res.report
            for n in range(len(rep.useful_bandwidth_hz)):
                w.writerow([res.category, _length_tag(res.length_m), res.compensation, n,
                            f"{rep.useful_bandwidth_hz[n]:.0f}", f"{rep.rates_bps[n]:.0f}",
                            _fmt(float(rep.line_power_dbm[n])), rep.n_antennas_max])
    for res in results:
        write_spectrum(out_dir / spectrum_filename(res.category, res.length_m, res.compensation),
                       res)

    with _open_csv(out_dir / "antennas_vs_length.csv") as fh:
        w = _writer(fh)
        w.writerow(ANTENNAS_COLUMNS)
        for cat in scenario.categories:
            for comp in scenario.compensations:
                for length in lengths:
                    res = evaluate_point(scenario, cat, length, comp, calibration)
                    w.writerow([cat, comp, _length_tag(length), res.report.n_antennas_max])
    return results
