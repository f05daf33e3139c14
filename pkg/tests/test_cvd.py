"""Simulation matrices, the worst-case distance, and its published anchors."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from palette_forge import colorspace as cs
from palette_forge import cvd

RGB8 = st.tuples(st.integers(0, 255), st.integers(0, 255), st.integers(0, 255))


def test_matrix_anchors():
    assert np.array_equal(cvd.cvd_matrix("deutan", 0).matrix, np.eye(3))
    protan100 = cvd.cvd_matrix("protan", 100).matrix
    assert protan100[0] == pytest.approx([0.152286, 1.052583, -0.204868], abs=1e-12)
    t55 = cvd.cvd_matrix("tritan", 55).matrix
    t50 = cvd.cvd_matrix("tritan", 50).matrix
    t60 = cvd.cvd_matrix("tritan", 60).matrix
    assert t55 == pytest.approx(0.5 * t50 + 0.5 * t60, abs=1e-12)


def test_matrix_rows_sum_to_one():
    for kind in cvd.KINDS:
        for sev in range(0, 101, 10):
            m = cvd.cvd_matrix(kind, sev).matrix
            assert m.sum(axis=1) == pytest.approx([1.0, 1.0, 1.0], abs=5e-6)


def test_matrix_rejects_bad_input():
    with pytest.raises(cs.PaletteError):
        cvd.cvd_matrix("deutan", 101)
    with pytest.raises(cs.PaletteError):
        cvd.cvd_matrix("deutan", -1)
    with pytest.raises(cs.PaletteError):
        cvd.cvd_matrix("achromat", 50)


@given(RGB8, st.sampled_from(cvd.KINDS))
@settings(max_examples=60, deadline=None)
def test_severity_zero_is_identity(c, kind):
    assert cvd.simulate(c, kind, 0) == pytest.approx(cs.srgb8_to_ucs(c), abs=0.0)


@given(st.integers(0, 255), st.sampled_from(cvd.KINDS), st.integers(0, 100))
@settings(max_examples=60, deadline=None)
def test_grays_nearly_unaffected(v, kind, sev):
    c = (v, v, v)
    d = cs.delta_e(cvd.simulate(c, kind, sev), cs.srgb8_to_ucs(c))
    assert d < 1.0


def test_protan_and_deutan_differ_on_red():
    c = (228, 37, 54)
    d = cs.delta_e(cvd.simulate(c, "protan", 100), cvd.simulate(c, "deutan", 100))
    assert d > 1.0


def test_simulate_srgb8_stays_in_gamut():
    out = cvd.simulate_srgb8((87, 144, 252), "tritan", 100)
    assert all(0 <= v <= 255 for v in out)
    assert cvd.simulate_srgb8((87, 144, 252), "deutan", 0) == (87, 144, 252)


def test_delta_e_cvd_identical_colors():
    assert cvd.delta_e_cvd((10, 200, 30), (10, 200, 30)) == 0.0


def test_delta_e_cvd_published_anchors():
    blue, orange, red = cs.parse_hex("#5790fc"), cs.parse_hex("#f89c20"), cs.parse_hex("#e42536")
    assert cvd.delta_e_cvd(orange, blue) == pytest.approx(57.1, abs=0.3)
    third = min(cvd.delta_e_cvd(red, blue), cvd.delta_e_cvd(red, orange))
    assert third == pytest.approx(21.3, abs=0.3)


def test_min_pairwise_anchors():
    assert cvd.min_pairwise_cvd([(5, 5, 5), (200, 10, 10), (5, 5, 5)]) == 0.0
    eight = [cs.parse_hex(h) for h in (
        "#1845fb", "#ff5e02", "#c91f16", "#c849a9",
        "#adad7d", "#86c8dd", "#578dff", "#656364")]
    assert cvd.min_pairwise_cvd(eight) == pytest.approx(18.1, abs=0.3)
    with pytest.raises(cs.PaletteError):
        cvd.min_pairwise_cvd([(1, 2, 3)])


@given(st.lists(RGB8, min_size=3, max_size=3, unique=True))
@settings(max_examples=20, deadline=None)
def test_min_pairwise_equals_brute_force(colors):
    sev = (30, 100)
    want = min(cvd.delta_e_cvd(a, b, sev)
               for i, a in enumerate(colors) for b in colors[i + 1:])
    assert cvd.min_pairwise_cvd(colors, sev) == pytest.approx(want, abs=1e-12)


@given(RGB8, RGB8)
@settings(max_examples=40, deadline=None)
def test_distance_symmetry_and_bound(c1, c2):
    sev = (50, 100)
    d12 = cvd.delta_e_cvd(c1, c2, sev)
    assert d12 == cvd.delta_e_cvd(c2, c1, sev)
    assert d12 <= cs.delta_e(cs.srgb8_to_ucs(c1), cs.srgb8_to_ucs(c2)) + 1e-12


@given(RGB8, RGB8)
@settings(max_examples=30, deadline=None)
def test_more_severities_never_increase_distance(c1, c2):
    small = cvd.delta_e_cvd(c1, c2, (40, 100))
    big = cvd.delta_e_cvd(c1, c2, (20, 40, 70, 100))
    assert big <= small + 1e-12


def test_severity_set_validation():
    with pytest.raises(cs.PaletteError):
        cvd.delta_e_cvd((0, 0, 0), (1, 1, 1), ())
    with pytest.raises(cs.PaletteError):
        cvd.delta_e_cvd((0, 0, 0), (1, 1, 1), (0, 50))
    with pytest.raises(cs.PaletteError):
        cvd.delta_e_cvd((0, 0, 0), (1, 1, 1), (101,))


def test_table_dichromat_coordinates_match_simulate(table_40_90):
    t = table_40_90
    rng = np.random.default_rng(5)
    kinds = {"deutan": t.deutan, "protan": t.protan, "tritan": t.tritan}
    for i in rng.integers(0, len(t), 10):
        c = tuple(int(x) for x in cs.unpack_rgb(t.rgb[i]))
        for kind, arr in kinds.items():
            want = cvd.simulate(c, kind, 100)
            assert tuple(arr[i]) == pytest.approx(want, abs=2e-3)
