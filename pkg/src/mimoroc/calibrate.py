"""Calibration helper: tabulate the planner figures the cable constants are tuned against.

    python -m mimoroc.calibrate                       # current calibration
    python -m mimoroc.calibrate --category cat5 --elfext 50 54 58 --gap 7 8

For each (category, ELFEXT reference, gap) it prints N_a,max and the 256-QAM
bandwidth over the 25-300 m sweep, with and without ideal compensation.
"""

from __future__ import annotations

import argparse
import dataclasses

from .band_plan import DEFAULT_GAP_DB, McsProfile, make_default_grid
from .cable_model import CableCategory, CableSpec, build_channel_matrices, load_calibration
from .fext_comp import IDEAL, compensate
from .osb import PowerConstraints, run_osb
from .planner import plan_capacity
from .scenario import DEFAULT_SWEEP_LENGTHS


def tabulate(category, elfext_ref_db=None, gap_db=DEFAULT_GAP_DB, lengths=DEFAULT_SWEEP_LENGTHS,
             calibration=None):
    """Rows of (length, N_a,max, N_a,max compensated, 256-QAM MHz, line power dBm)."""
    grid = make_default_grid()
    profile = McsProfile.from_gap(gap_db)
    constraints = PowerConstraints()
    rows = []
    for length in lengths:
        spec = CableSpec.from_category(category, length, calibration)
        if elfext_ref_db is not None:
            spec = dataclasses.replace(spec, elfext_ref_db=elfext_ref_db)
        ch = build_channel_matrices(spec, grid)
        plain = run_osb(ch, profile, constraints)
        ideal = run_osb(compensate(ch, IDEAL), profile, constraints)
        rep = plan_capacity(plain, grid)
        rows.append((length, rep.n_antennas_max, plan_capacity(ideal, grid).n_antennas_max,
                     rep.qam256_bandwidth_hz / 1e6, float(plain.line_power_dbm.max())))
    return rows


def main(argv=None):
    p = argparse.ArgumentParser(prog="python -m mimoroc.calibrate")
    p.add_argument("--category", nargs="*", default=[c.value for c in CableCategory])
    p.add_argument("--elfext", nargs="*", type=float, default=[None])
    p.add_argument("--gap", nargs="*", type=float, default=[DEFAULT_GAP_DB])
    p.add_argument("--calibration", help="calibration TOML (default: bundled / env override)")
    args = p.parse_args(argv)
    cal = load_calibration(args.calibration)
    for cat in args.category:
        for ref in args.elfext:
            for gap in args.gap:
                shown = cal[CableCategory.parse(cat)].elfext_ref_db if ref is None else ref
                print(f"# {cat} elfext_ref_db={shown:g} gap_db={gap:g}")
                print("length_m  N_a_max  N_a_max_comp  qam256_MHz  max_P_line_dBm")
                for row in tabulate(cat, ref, gap, calibration=cal):
                    print("{:8g}  {:7d}  {:12d}  {:10g}  {:14.2f}".format(*row))


if __name__ == "__main__":
    main()
