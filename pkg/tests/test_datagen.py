import math

import numpy as np
import pytest

from gbq.datagen import (
    RoughDataSpec,
    gaussian_data,
    load_data,
    packet_data,
    philox,
    rough_data,
    save_data,
)
from gbq.dynamics import initial_state
from gbq.propagators import gamma_values
from gbq.spectral import Field, FourierGrid, forward, lp_norm, sobolev_norm


def test_philox_streams_differ_and_repeat():
    a = philox(7, 0).standard_normal(4)
    b = philox(7, 1).standard_normal(4)
    assert not np.array_equal(a, b)
    np.testing.assert_array_equal(a, philox(7, 0).standard_normal(4))


class TestGaussian:
    def test_zero_amplitude(self):
        g = FourierGrid(80.0, 256)
        phi, psi = gaussian_data(0.0, 1.0, g)
        assert not np.any(phi.values) and not np.any(psi.values)

    def test_even_so_real_spectrum(self):
        g = FourierGrid(80.0, 256)
        c = forward(gaussian_data(1.0, 1.3, g)[0]).coeffs
        assert np.max(np.abs(c.imag)) <= 1e-14 * np.max(np.abs(c))

    def test_l2_norm(self):
        g = FourierGrid(80.0, 1024)
        A, w = 1.7, 1.3
        got = lp_norm(gaussian_data(A, w, g)[0], 2)
        assert got == pytest.approx(A * (math.pi * w**2) ** 0.25, rel=1e-12)

    def test_too_wide(self):
        with pytest.raises(ValueError, match="boundary value"):
            gaussian_data(1.0, 5.0, FourierGrid(20.0, 128))


class TestRough:
    def test_deterministic(self):
        g = FourierGrid(2 * np.pi, 256)
        a = rough_data(RoughDataSpec(s=0.9, seed=11), g)
        b = rough_data(RoughDataSpec(s=0.9, seed=11), g)
        for x, y in zip(a, b):
            assert np.array_equal(x.values, y.values)
        c = rough_data(RoughDataSpec(s=0.9, seed=11, stream=1), g)
        assert not np.array_equal(a[0].values, c[0].values)

    def test_spectral_law(self):
        g = FourierGrid(2 * np.pi, 256)
        A, s = 0.7, 0.8
        phi, psi = rough_data(RoughDataSpec(s=s, amplitude=A, seed=2), g)
        cp, cq = forward(phi).coeffs, forward(psi).coeffs
        sel = np.abs(g.index) > 0
        sel[0] = False
        br = np.sqrt(1 + g.xi[sel] ** 2)
        np.testing.assert_allclose(np.abs(cp[sel]), A * br ** -(s + 0.5), rtol=1e-12)
        np.testing.assert_allclose(np.abs(cq[sel]), A * br ** -(s - 0.5), rtol=1e-12)
        assert abs(cq[g.zero]) <= 1e-12
        assert abs(abs(cp[g.zero]) - A) <= 1e-12

    def test_psi_zero_mean_accepted(self):
        g = FourierGrid(2 * np.pi, 256)
        st = initial_state(*rough_data(RoughDataSpec(s=0.9, seed=4), g))
        assert st.ut_hat.coeffs[g.zero] == 0

    def test_amplitude_linearity(self):
        g = FourierGrid(2 * np.pi, 128)
        a = rough_data(RoughDataSpec(s=0.7, amplitude=1.0, seed=5), g)[0]
        b = rough_data(RoughDataSpec(s=0.7, amplitude=2.0, seed=5), g)[0]
        for s in (0.0, 0.5, 1.0):
            assert sobolev_norm(forward(b), s) == pytest.approx(2 * sobolev_norm(forward(a), s), rel=1e-13)

    def test_resolution_sweep(self):
        s = 0.8
        low, high = [], []
        # the H^{s-0.1} tail is a slowly convergent sum; L = pi puts the
        # sweep's Nyquist range at 512..2048
        for M in (512, 1024, 2048):
            g = FourierGrid(np.pi, M)
            F = forward(rough_data(RoughDataSpec(s=s, seed=8, with_psi=False), g)[0])
            low.append(sobolev_norm(F, s - 0.1))
            high.append(sobolev_norm(F, s + 0.1))
        assert abs(low[2] / low[1] - 1) <= 0.02
        assert abs(low[2] / low[1] - 1) < abs(low[1] / low[0] - 1)
        assert high[0] < high[1] < high[2]

    def test_cutoff_law(self):
        g = FourierGrid(2 * np.pi, 256)
        phi, _ = rough_data(RoughDataSpec(s=0.9, seed=1, law="cutoff", cutoff=10.0), g)
        c = forward(phi).coeffs
        assert np.max(np.abs(c[np.abs(g.xi) > 30])) <= 1e-12

    def test_unknown_law(self):
        with pytest.raises(ValueError, match="law"):
            rough_data(RoughDataSpec(s=0.9, law="pink"), FourierGrid(1.0, 16))


def test_packet_moves_one_way():
    g = FourierGrid(4 * np.pi, 512)
    phi, psi = packet_data(0.0, 1.0, 40.0, 1.0, g)
    st = initial_state(phi, psi)
    u, ut = st.u_hat.coeffs, st.ut_hat.coeffs
    pos = g.xi > 0
    # right-moving: u_t^ = -i gamma u^ on xi > 0
    np.testing.assert_allclose(ut[pos], -1j * gamma_values(g.xi[pos]) * u[pos],
                               atol=1e-12 * np.max(np.abs(ut)))


class TestFiles:
    def test_round_trip(self, tmp_path):
        g = FourierGrid(2 * np.pi, 64)
        phi, psi = rough_data(RoughDataSpec(s=0.6, seed=3), g)
        save_data(tmp_path / "d.csv", phi, psi)
        a, b = load_data(tmp_path / "d.csv", g)
        assert np.array_equal(a.values, phi.values)
        assert np.array_equal(b.values, psi.values)

    def test_wrong_row_count(self, tmp_path):
        g = FourierGrid(2 * np.pi, 64)
        phi, psi = rough_data(RoughDataSpec(s=0.6), g)
        save_data(tmp_path / "d.csv", phi, psi)
        with pytest.raises(ValueError, match="M=128"):
            load_data(tmp_path / "d.csv", FourierGrid(2 * np.pi, 128))

    def test_nonzero_mean_psi(self, tmp_path):
        g = FourierGrid(2 * np.pi, 64)
        phi = Field(g, np.cos(g.x))
        psi = Field(g, 0.25 + np.sin(g.x))
        save_data(tmp_path / "d.csv", phi, psi)
        with pytest.raises(ValueError, match="nonzero mean 2.5"):
            load_data(tmp_path / "d.csv", g)

    def test_malformed(self, tmp_path):
        g = FourierGrid(2 * np.pi, 16)
        p = tmp_path / "d.csv"
        p.write_text("a,b,c\n")
        with pytest.raises(ValueError, match="header"):
            load_data(p, g)
        rows = "\n".join(f"{x!r},oops,0" for x in g.x)
        p.write_text("x,phi,psi\n" + rows + "\n")
        with pytest.raises(ValueError, match="malformed"):
            load_data(p, g)
