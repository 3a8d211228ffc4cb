import math

import numpy as np
import pytest

from gbq.estimates import (
    SpaceTimeBlock,
    admissible,
    bilinear_ensemble,
    bilinear_ratio,
    bump,
    check_pair,
    free_block,
    free_wave_ensemble,
    mixed_norm,
    strichartz_ratio,
    uniform_over_sweep,
    xsb_norm,
)
from gbq.propagators import gamma_values
from gbq.spectral import Field, FourierGrid, forward


def single_mode_block(grid, j, T_w, Q=None):
    phi = forward(Field(grid, np.cos(grid.xi[grid.zero + j] * grid.x))).coeffs
    return free_block(grid, phi, np.zeros(grid.M, complex), T_w, Q)


def test_bump_vanishes_at_ends():
    T = 2.0
    t = np.linspace(0, T, 4097)
    b = bump(t, T)
    assert b[0] <= 1e-12 and b[-1] <= 1e-12
    assert b[len(b) // 2] == pytest.approx(1.0)
    assert np.all(b >= 0)


def test_block_validation():
    g = FourierGrid(2 * np.pi, 16)
    with pytest.raises(ValueError, match="power of two"):
        SpaceTimeBlock(g, 1.0, np.zeros((16, 12)))
    with pytest.raises(ValueError, match="shape"):
        SpaceTimeBlock(g, 1.0, np.zeros((8, 16)))


def test_zero_block():
    g = FourierGrid(2 * np.pi, 16)
    assert xsb_norm(SpaceTimeBlock(g, 1.0, np.zeros((16, 32))), 0.5, 0.55) == 0.0


def test_parseval():
    g = FourierGrid(8 * np.pi, 64)
    rng = np.random.default_rng(0)
    v = rng.standard_normal((64, 128))
    blk = SpaceTimeBlock(g, 2.0, v)
    direct = math.sqrt(np.sum(v**2) * g.dx * blk.dt)
    assert xsb_norm(blk, 0.0, 0.0) == pytest.approx(direct, rel=1e-12)
    assert mixed_norm(blk, 2, 2) == pytest.approx(direct, rel=1e-12)


def test_monotone_in_s_and_b():
    g = FourierGrid(8 * np.pi, 64)
    blk = free_wave_ensemble(g, 2.0, 1, 0, 2.0)[0]
    vals = [[xsb_norm(blk, s, b) for b in (0.0, 0.3, 0.55, 1.0)] for s in (-0.5, 0.0, 0.5, 1.0)]
    arr = np.array(vals)
    assert np.all(np.diff(arr, axis=0) > 0)
    assert np.all(np.diff(arr, axis=1) > 0)


def test_free_solution_concentrates_on_dispersion_curve():
    g = FourierGrid(8 * np.pi, 256)
    ratios = []
    for scale in (1.0, 4.0, 16.0):
        blk = free_wave_ensemble(g, scale, 1, 3, 2.0)[0]
        ratios.append(xsb_norm(blk, 0, 0.55) / xsb_norm(blk, 0, 0))
    assert max(ratios) <= 2 * ratios[0]


def test_admissibility():
    assert admissible(8, 4)
    assert 2 / 8 == 0.5 - 1 / 4
    assert admissible(math.inf, 2)
    assert not admissible(3, 3)
    assert check_pair(6, 6, 0.55) == 0.0
    assert check_pair(math.inf, math.inf, 0.55) == pytest.approx(0.55)
    with pytest.raises(ValueError, match="inadmissible"):
        strichartz_ratio([], 3, 3)


def test_single_mode_mixed_norm_closed_form():
    g = FourierGrid(2 * np.pi, 64)
    T_w = 2.0
    blk = single_mode_block(g, 3, T_w)
    gam = float(gamma_values(np.array([3.0]))[0])
    # spatial L^4 of cos 3x over one period, temporal part by dense quadrature
    sp = (3 * math.pi / 4) ** 0.25
    t = np.linspace(0, T_w, 200001)
    w = np.abs(np.cos(gam * t) * bump(t, T_w)) ** 8
    tp = np.trapezoid(w, t) ** (1 / 8)
    assert mixed_norm(blk, 8, 4) == pytest.approx(sp * tp, rel=1e-8)
    r = strichartz_ratio([blk], 8, 4)
    assert 0 < r.max < np.inf


def test_L2_ratio_is_one():
    g = FourierGrid(8 * np.pi, 128)
    ens = free_wave_ensemble(g, 4.0, 4, 1, 2.0)
    st = strichartz_ratio(ens, 2, 2, b=0.0)
    np.testing.assert_allclose(st.values, 1.0, atol=1e-12)


def test_bilinear_zero_partner():
    g = FourierGrid(2 * np.pi, 128)
    d1, p1, p2 = bilinear_ensemble(g, 4, 16, 1, 0, 0.25)[0]
    z = SpaceTimeBlock(g, 0.25, np.zeros_like(p2.values))
    assert bilinear_ratio([(d1, p1, z)]).values == [0.0]


def test_bilinear_single_modes_closed_form():
    g = FourierGrid(2 * np.pi, 64)
    T_w = 0.5
    Q = 2048
    b1 = single_mode_block(g, 2, T_w, Q)
    b2 = single_mode_block(g, 9, T_w, Q)
    d1 = SpaceTimeBlock(g, T_w, math.sqrt(2.0) * b1.values)
    r = bilinear_ratio([(d1, b1, b2)], b=0.55).values[0]
    num = r * xsb_norm(b1, 0, 0.55) * xsb_norm(b2, 0, 0.55)
    g1, g2 = gamma_values(np.array([2.0, 9.0]))
    t = np.linspace(0, T_w, 400001)
    temporal = np.trapezoid((np.cos(g1 * t) * np.cos(g2 * t) * bump(t, T_w) ** 2) ** 2, t)
    # |xi1| * integral of cos^2(2x) cos^2(9x) over one period = 2 * pi/2
    exact = math.sqrt(2.0 * (math.pi / 2) * temporal)
    assert num == pytest.approx(exact, rel=1e-8)


def test_bilinear_support_condition():
    with pytest.raises(ValueError, match="N2 >= 4 N1"):
        bilinear_ensemble(FourierGrid(2 * np.pi, 128), 4, 8, 1, 0, 0.25)


def test_bilinear_sweep_uniform():
    g = FourierGrid(2 * np.pi, 1024)
    maxima = [bilinear_ratio(bilinear_ensemble(g, 4, N2, 4, 0, 0.25)).max for N2 in (16, 32, 64, 128)]
    assert uniform_over_sweep(maxima)


@pytest.mark.parametrize("q, p", [(6, 6), (8, 4), (4, 4)])
def test_strichartz_sweep_uniform(q, p):
    g = FourierGrid(8 * np.pi, 256)
    maxima = [strichartz_ratio(free_wave_ensemble(g, s, 4, 0, 2.0), q, p).max
              for s in (1.0, 4.0, 16.0)]
    assert uniform_over_sweep(maxima)


def test_ensemble_doubling_is_stable():
    g = FourierGrid(8 * np.pi, 128)
    small = strichartz_ratio(free_wave_ensemble(g, 4.0, 8, 5, 2.0), 6, 6).max
    big = strichartz_ratio(free_wave_ensemble(g, 4.0, 16, 5, 2.0), 6, 6).max
    assert abs(big / small - 1) <= 0.10


def test_uniform_over_sweep():
    assert uniform_over_sweep([1.0, 1.5, 2.0])
    assert not uniform_over_sweep([1.0, 2.1])
