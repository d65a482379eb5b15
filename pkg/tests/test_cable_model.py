import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mimoroc.band_plan import make_default_grid
from mimoroc.cable_model import (
    CableCategory,
    CableSpec,
    CalibrationError,
    ModelValidityError,
    build_channel_matrices,
    elfext_db,
    fext_coupling_db,
    insertion_loss_db,
    load_calibration,
    noise_power_w,
    parse_calibration,
    w_to_dbm,
)
from mimoroc.osb import sinr_vector

CAT5_LIMIT_LINE = (1.967, 0.023, 0.050)
CATEGORIES = list(CableCategory)


def cat5(length, **kw):
    return CableSpec(CableCategory.CAT5, length, CAT5_LIMIT_LINE, 56.0, **kw)


def test_cat5_limit_line_at_100mhz():
    # 1.967*10 + 0.023*100 + 0.050/10
    assert insertion_loss_db(cat5(100.0), 100.0) == pytest.approx(21.975, abs=1e-12)


def test_zero_length_limit():
    assert insertion_loss_db(cat5(1e-9), 250.0) == pytest.approx(0.0, abs=1e-8)


@pytest.mark.parametrize("f", [1.0, 11.0, 100.0, 333.3, 500.0])
def test_length_scaling_is_linear(f):
    assert insertion_loss_db(cat5(200.0), f) == pytest.approx(2 * insertion_loss_db(cat5(100.0), f))


@pytest.mark.parametrize("f", [0.5, 500.1, -3.0, float("nan")])
def test_out_of_validity_frequency(f):
    with pytest.raises(ModelValidityError):
        insertion_loss_db(cat5(100.0), f)
    with pytest.raises(ModelValidityError):
        fext_coupling_db(cat5(100.0), f)


def test_elfext_slope_is_20db_per_decade():
    s = cat5(100.0)
    assert elfext_db(s, 100.0) - elfext_db(s, 200.0) == pytest.approx(20 * math.log10(2))
    assert 20 * math.log10(2) == pytest.approx(6.0206, abs=1e-4)


def test_fext_at_reference_point():
    s = cat5(100.0)
    assert fext_coupling_db(s, 100.0) == pytest.approx(56.0 + insertion_loss_db(s, 100.0))


def test_coupling_loss_ordered_by_category(calibration):
    f = np.linspace(1.0, 500.0, 400)
    for length in (1.0, 25.0, 50.0, 100.0, 200.0, 300.0, 500.0):
        c5, c6, c7 = (
            fext_coupling_db(CableSpec.from_category(c, length, calibration), f) for c in CATEGORIES
        )
        assert np.all(c7 > c6) and np.all(c6 > c5)


def test_insertion_loss_ordered_by_category(calibration):
    f = np.linspace(1.0, 500.0, 400)
    il = [insertion_loss_db(CableSpec.from_category(c, 100.0, calibration), f) for c in CATEGORIES]
    assert np.all(il[0] > il[1]) and np.all(il[1] > il[2])


def test_noise_per_tone():
    dbm = float(w_to_dbm(noise_power_w(-140.0, 22e6)))
    # -140 + 10*log10(22e6)
    assert dbm == pytest.approx(-66.57577, abs=1e-5)


def test_channel_shape(grid, calibration):
    ch = build_channel_matrices(CableSpec.from_category("cat5", 100.0, calibration), grid)
    assert ch.gains.shape == (22, 4, 4)
    assert ch.noise_w.shape == (22, 4)
    assert float(w_to_dbm(ch.noise_w[0, 0])) == pytest.approx(-66.57577, abs=1e-5)


def test_channel_entries_match_models(grid):
    s = cat5(100.0)
    ch = build_channel_matrices(s, grid)
    k = 7
    f = grid.tones_hz[k] / 1e6
    assert ch.gains[k, 1, 1] == pytest.approx(10 ** (-insertion_loss_db(s, f) / 10))
    assert ch.gains[k, 0, 3] == pytest.approx(10 ** (-fext_coupling_db(s, f) / 10))


def test_infinite_elfext_gives_diagonal_channels(grid):
    s = dataclasses.replace(cat5(100.0), elfext_ref_db=math.inf)
    g = build_channel_matrices(s, grid).gains
    off = g * (1 - np.eye(4))
    assert np.all(off == 0)
    assert np.all(np.diagonal(g, axis1=1, axis2=2) > 0)


def test_out_of_range_grid_propagates():
    with pytest.raises(ModelValidityError):
        build_channel_matrices(cat5(100.0), make_default_grid(1000e6, 22e6, 4))


@settings(max_examples=60, deadline=None)
@given(
    cat=st.sampled_from(CATEGORIES),
    length=st.floats(0.5, 500.0),
)
def test_channel_invariants(cat, length):
    cal = load_calibration()
    grid = make_default_grid()
    ch = build_channel_matrices(CableSpec.from_category(cat, length, cal), grid)
    g = ch.gains
    diag = np.diagonal(g, axis1=1, axis2=2)
    off = g[:, ~np.eye(4, dtype=bool)].reshape(g.shape[0], -1)
    assert np.all(np.isfinite(g))
    assert np.all((diag > 0) & (diag <= 1))
    assert np.all(off >= 0)
    assert np.all(off.max(axis=1) < diag.min(axis=1))


@settings(max_examples=60, deadline=None)
@given(
    cat=st.sampled_from(CATEGORIES),
    l1=st.floats(0.5, 250.0),
    l2=st.floats(0.5, 250.0),
    f1=st.floats(1.0, 500.0),
    f2=st.floats(1.0, 500.0),
)
def test_il_monotone_and_additive(cat, l1, l2, f1, f2):
    cal = load_calibration()
    a = CableSpec.from_category(cat, l1, cal)
    b = CableSpec.from_category(cat, l2, cal)
    ab = CableSpec.from_category(cat, l1 + l2, cal)
    assert insertion_loss_db(ab, f1) == pytest.approx(
        insertion_loss_db(a, f1) + insertion_loss_db(b, f1), rel=1e-12
    )
    if f1 < f2:
        assert insertion_loss_db(a, f1) < insertion_loss_db(a, f2)


@pytest.mark.parametrize("cat", CATEGORIES)
def test_direct_gain_and_mask_sinr_nonincreasing_in_length(cat, grid, calibration):
    lengths = np.linspace(5, 500, 40)
    direct, mask_sinr = [], []
    for length in lengths:
        spec = CableSpec.from_category(cat, length, calibration)
        ch = build_channel_matrices(spec, grid)
        p_mask = 10 ** ((spec.mask_psd_dbm_hz + 10 * math.log10(22e6) - 30) / 10)
        direct.append(ch.direct_gains()[:, 0])
        mask_sinr.append([sinr_vector(ch.gains[k], np.full(4, p_mask), ch.noise_w[k])[0]
                          for k in range(ch.n_tones)])
    assert np.all(np.diff(np.array(direct), axis=0) <= 0)
    assert np.all(np.diff(np.array(mask_sinr), axis=0) <= 0)


def test_spec_validation():
    with pytest.raises(ValueError):
        cat5(0.0)
    with pytest.raises(ValueError):
        cat5(-5.0)
    with pytest.raises(ValueError):
        cat5(100.0, noise_psd_dbm_hz=-70.0)
    with pytest.raises(ValueError):
        CableSpec(CableCategory.CAT5, 10.0, (-1.0, 0.0, 0.0), 50.0)
    with pytest.raises(ValueError):
        CableSpec(CableCategory.CAT5, 10.0, (0.1, 0.0, 1.0), 50.0)


def test_category_parse():
    assert CableCategory.parse("Cat-6") is CableCategory.CAT6
    assert CableCategory.parse("cat_7") is CableCategory.CAT7
    with pytest.raises(ValueError):
        CableCategory.parse("cat8")


def test_bundled_calibration_has_all_categories(calibration):
    assert set(calibration) == set(CableCategory)
    assert calibration[CableCategory.CAT5].il_coeffs == CAT5_LIMIT_LINE


GOOD = """
[cat5]
k1 = 1.967
k2 = 0.023
k3 = 0.05
elfext_ref_db = 50
[cat6]
k1 = 1.8
k2 = 0.02
k3 = 0.2
elfext_ref_db = 60
[cat7]
k1 = 1.8
k2 = 0.01
k3 = 0.2
elfext_ref_db = 70
"""


def test_parse_calibration_roundtrip():
    cal = parse_calibration(GOOD)
    assert cal[CableCategory.CAT7].elfext_ref_db == 70.0


@pytest.mark.parametrize("text,key", [
    (GOOD.replace("k2 = 0.02\n", ""), "cat6.k2"),
    (GOOD.replace("elfext_ref_db = 70", "elfext_ref_db = \"high\""), "cat7.elfext_ref_db"),
    (GOOD + "[cat9]\nk1 = 1\n", "cat9"),
    (GOOD.replace("k3 = 0.05", "k3 = 0.05\nk4 = 1.0"), "cat5.k4"),
    (GOOD.replace("k1 = 1.967", "k1 = -1.0"), "cat5.k1"),
])
def test_malformed_calibration_names_the_key(text, key):
    with pytest.raises(CalibrationError, match=key.replace(".", r"\.")):
        parse_calibration(text)


def test_calibration_env_override(tmp_path, monkeypatch):
    path = tmp_path / "cal.toml"
    path.write_text(GOOD.replace("elfext_ref_db = 50", "elfext_ref_db = 42"))
    monkeypatch.setenv("MIMOROC_CALIBRATION", str(path))
    assert load_calibration()[CableCategory.CAT5].elfext_ref_db == 42.0


def test_calibration_env_override_malformed(tmp_path, monkeypatch):
    path = tmp_path / "cal.toml"
    path.write_text("[cat5]\nk1 = 1.0\n")
    monkeypatch.setenv("MIMOROC_CALIBRATION", str(path))
    with pytest.raises(CalibrationError):
        load_calibration()
