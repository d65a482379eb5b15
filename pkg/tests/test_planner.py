import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mimoroc.band_plan import make_default_grid
from mimoroc.cable_model import CableSpec, build_channel_matrices
from mimoroc.osb import PowerAllocation, run_osb, sinr_vector
from mimoroc.planner import (
    AirLinkSpec,
    CapacityExceededError,
    degradation_db,
    end_to_end_sinr,
    map_antennas,
    max_antennas,
    plan_capacity,
    qam256_bandwidth,
    transparency_check,
    useful_bandwidth,
)


def fake_alloc(bits, tone_bw=22e6):
    bits = np.asarray(bits, dtype=int)
    k = bits.shape[0]
    return PowerAllocation(
        tones_hz=tone_bw * (np.arange(k) + 0.5),
        tone_bandwidth_hz=tone_bw,
        bits=bits,
        powers_w=np.where(bits > 0, 1e-4, 0.0),
        lambdas=np.zeros(bits.shape[1]),
    )


def test_useful_bandwidth_full_and_empty(grid):
    full = fake_alloc(np.full((22, 4), 8))
    assert useful_bandwidth(full, grid, 0) == pytest.approx(484e6)
    empty = fake_alloc(np.zeros((22, 4)))
    assert useful_bandwidth(empty, grid, 3) == 0.0


def test_useful_bandwidth_counts_non_contiguous_tones(grid):
    bits = np.zeros((22, 4), dtype=int)
    bits[[0, 3, 10], 1] = [8, 2, 4]
    assert useful_bandwidth(fake_alloc(bits), grid, 1) == pytest.approx(3 * 22e6)


def test_useful_bandwidth_pair_out_of_range(grid):
    with pytest.raises(IndexError):
        useful_bandwidth(fake_alloc(np.zeros((22, 4))), grid, 4)


def test_max_antennas_examples():
    assert max_antennas([500e6] * 4, 22e6) == 88
    assert max_antennas([0.0] * 4, 22e6) == 0
    assert max_antennas([44e6, 44e6, 22e6, 21.9e6], 22e6) == 5


@given(st.lists(st.integers(0, 22), min_size=1, max_size=8))
def test_max_antennas_is_exact_for_tone_counts(counts):
    assert max_antennas([c * 22e6 for c in counts], 22e6) == sum(counts)


def test_qam256_bandwidth_is_a_prefix():
    bits = np.full((22, 4), 8)
    bits[5, 2] = 6
    assert qam256_bandwidth(fake_alloc(bits)) == pytest.approx(5 * 22e6)
    assert qam256_bandwidth(fake_alloc(np.full((22, 4), 8))) == pytest.approx(484e6)


def test_map_single_antenna_gets_best_resource(grid):
    bits = np.full((22, 4), 4)
    bits[7, 2] = 8
    m = map_antennas(1, fake_alloc(bits), grid)
    assert [(a.pair, a.tone, a.bits) for a in m] == [(2, 7, 8)]


def test_map_full_grid_is_bijection(grid):
    m = map_antennas(88, fake_alloc(np.full((22, 4), 8)), grid)
    assert len({(a.pair, a.tone) for a in m}) == 88
    assert [a.antenna for a in m] == list(range(88))
    # equal bits: lower tone first, then lower pair
    assert [(a.tone, a.pair) for a in m[:5]] == [(0, 0), (0, 1), (0, 2), (0, 3), (1, 0)]


def test_map_too_many_antennas(grid):
    with pytest.raises(CapacityExceededError, match="short by 1"):
        map_antennas(89, fake_alloc(np.full((22, 4), 8)), grid)


def test_map_only_uses_active_resources(grid, calibration):
    ch = build_channel_matrices(CableSpec.from_category("cat5", 200.0, calibration), grid)
    alloc = run_osb(ch)
    n_max = plan_capacity(alloc, grid).n_antennas_max
    m = map_antennas(n_max, alloc, grid)
    assert all(alloc.bits[a.tone, a.pair] > 0 for a in m)
    bw = sum(useful_bandwidth(alloc, grid, n) for n in range(4))
    assert bw >= n_max * 22e6
    bits = [a.bits for a in m]
    assert bits == sorted(bits, reverse=True)


def test_transparent_cable_limit():
    assert degradation_db(100.0, math.inf) == 0.0
    assert degradation_db(100.0, 1e15) == pytest.approx(0.0, abs=1e-9)


def test_symmetric_limit_tends_to_3db():
    g = 1e9
    assert float(end_to_end_sinr(g, g)) == pytest.approx(g * g / (2 * g + 1))
    assert degradation_db(g, g) == pytest.approx(10 * math.log10(2), abs=1e-6)


def test_af_cascade_example():
    ga, gc = 100.0, 1000.0
    e2e = float(end_to_end_sinr(ga, gc))
    assert e2e == pytest.approx(1e5 / 1101)
    assert 10 * math.log10(e2e) == pytest.approx(19.58, abs=0.005)
    assert degradation_db(ga, gc) == pytest.approx(0.4178, abs=1e-4)


@given(st.floats(-10, 60), st.floats(-10, 60), st.floats(0.01, 10))
def test_degradation_positive_and_decreasing_in_cable_sinr(air_db, cable_db, step_db):
    ga = 10 ** (air_db / 10)
    lo = degradation_db(ga, 10 ** (cable_db / 10))
    hi = degradation_db(ga, 10 ** ((cable_db + step_db) / 10))
    assert lo > 0
    assert hi < lo


def test_transparency_check_uses_cable_sinr(grid, calibration):
    ch = build_channel_matrices(CableSpec.from_category("cat5", 100.0, calibration), grid)
    alloc = run_osb(ch)
    m = map_antennas(3, alloc, grid)
    air = AirLinkSpec(n_users=1, n_antennas=3, air_snr_db=20.0)
    deg = transparency_check(air, alloc, ch, m)
    for a, d in zip(m, deg):
        gc = sinr_vector(ch.gains[a.tone], alloc.powers_w[a.tone], ch.noise_w[a.tone])[a.pair]
        assert d == pytest.approx(degradation_db(100.0, gc))


def test_transparency_check_needs_every_antenna_mapped(grid, calibration):
    ch = build_channel_matrices(CableSpec.from_category("cat5", 100.0, calibration), grid)
    alloc = run_osb(ch)
    with pytest.raises(ValueError, match="not mapped"):
        transparency_check(AirLinkSpec(n_antennas=4), alloc, ch, map_antennas(3, alloc, grid))


def test_plan_capacity_report(grid, calibration):
    ch = build_channel_matrices(CableSpec.from_category("cat5", 100.0, calibration), grid)
    alloc = run_osb(ch)
    rep = plan_capacity(alloc, grid, ch, AirLinkSpec(n_antennas=200, air_snr_db=15.0))
    assert rep.n_antennas_max == sum(math.floor(b / 22e6) for b in rep.useful_bandwidth_hz)
    assert rep.n_antennas_max <= 88
    assert len(rep.mapping) == rep.n_antennas_max
    assert rep.degradation_db.shape == (rep.n_antennas_max,)
    assert rep.transparent == bool(np.all(rep.degradation_db <= 3.0))


def test_allocation_grid_mismatch(grid):
    with pytest.raises(ValueError):
        plan_capacity(fake_alloc(np.zeros((21, 4))), grid)


def test_air_link_validation():
    with pytest.raises(ValueError):
        AirLinkSpec(n_antennas=0)
    with pytest.raises(ValueError):
        AirLinkSpec(air_snr_db=math.inf)


@pytest.mark.parametrize("length", [100.0, 200.0])
def test_antenna_count_ordered_by_category(length, calibration):
    grid = make_default_grid()
    counts = []
    for cat in ("cat5", "cat6", "cat7"):
        ch = build_channel_matrices(CableSpec.from_category(cat, length, calibration), grid)
        counts.append(plan_capacity(run_osb(ch), grid).n_antennas_max)
    assert counts[0] <= counts[1] <= counts[2]
