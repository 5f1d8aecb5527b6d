import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isingdual.analysis import (
    Series,
    binder_crossing,
    dualize_energy,
    extrapolate_infinite_size,
    quartic_peak_fit,
    write_tsv,
)
from isingdual.bounds import kw_dual
from isingdual.exact import thermal_observables
from isingdual.gf2 import dual_matrix
from isingdual.tiling import square_torus


class TestSeries:
    def test_rejects_non_monotone(self):
        with pytest.raises(ValueError):
            Series([1, 3, 2], [0, 0, 0])

    def test_rejects_shape(self):
        with pytest.raises(ValueError):
            Series([1, 2], [0, 0, 0])


class TestDualize:
    def test_involution(self):
        T = np.linspace(1.0, 5.0, 41)
        s = Series(T, -np.tanh(1 / T), 0.01 * np.ones_like(T))
        back = dualize_energy(dualize_energy(s))
        assert np.allclose(back.x, s.x, atol=1e-9)
        assert np.allclose(back.y, s.y, atol=1e-9)
        assert np.allclose(back.yerr, s.yerr, atol=1e-9)

    @settings(max_examples=100)
    @given(st.floats(0.05, 3.0))
    def test_single_bond(self, K):
        # a lone bond has eps = -tanh K; its dual has no spins, so eps* = -1
        out = dualize_energy(Series([1 / K], [-math.tanh(K)]))
        assert out.x[0] == pytest.approx(1 / kw_dual(K), rel=1e-12)
        assert out.y[0] == pytest.approx(-1.0, abs=1e-10)

    def test_torus_matches_exact_dual(self):
        G = square_torus(2).G
        D = dual_matrix(G)
        T = np.linspace(1.5, 4.0, 6)
        direct = Series(T, [thermal_observables(G, t)["eps"] for t in T])
        dual = dualize_energy(direct)
        # dual_matrix spans the full orthogonal complement, so the relation is exact
        for Ts, y in zip(dual.x, dual.y):
            assert y == pytest.approx(thermal_observables(D, Ts)["eps"], abs=1e-10)

    def test_negative_temperature(self):
        with pytest.raises(ValueError):
            dualize_energy(Series([-1.0, 1.0], [0.0, 0.0]))


def quartic(x, xm=2.7, ym=1.3):
    u = x - xm
    return ym - 2.0 * u**2 + 0.5 * u**3 - 0.3 * u**4


class TestQuarticFit:
    def test_exact_recovery(self):
        x = np.linspace(2.3, 3.1, 17)
        fit = quartic_peak_fit(Series(x, quartic(x)))
        assert fit.success
        assert fit.x_m == pytest.approx(2.7, abs=1e-8)
        assert fit.y_m == pytest.approx(1.3, abs=1e-8)

    def test_noisy_within_errors(self):
        rng = np.random.default_rng(4)
        x = np.linspace(2.3, 3.1, 33)
        sig = 0.002 * np.ones_like(x)
        fit = quartic_peak_fit(Series(x, quartic(x) + rng.normal(0, sig), sig))
        assert abs(fit.x_m - 2.7) < 4 * fit.x_err
        assert abs(fit.y_m - 1.3) < 4 * fit.y_err
        assert fit.x_err > 0

    def test_minimum(self):
        x = np.linspace(-1, 1, 21)
        fit = quartic_peak_fit(Series(x, (x - 0.1) ** 2 + 0.2 * (x - 0.1) ** 4), 0.6,
                               maximum=False)
        assert fit.x_m == pytest.approx(0.1, abs=1e-8)

    def test_too_few_points(self):
        x = np.linspace(2.3, 3.1, 5)
        with pytest.raises(ValueError, match="degenerate window"):
            quartic_peak_fit(Series(x, quartic(x)))


class TestExtrapolation:
    def test_linear_exact(self):
        n = np.array([80, 150, 330, 480])
        pts = np.column_stack([n, 3.9 - 2.0 / np.sqrt(n)])
        T0, err = extrapolate_infinite_size(pts)
        assert T0 == pytest.approx(3.9, abs=1e-12) and err < 1e-10

    def test_quadratic_exact(self):
        n = np.array([80, 150, 330, 480, 900])
        x = n**-0.5
        pts = np.column_stack([n, 3.872 - x + 5 * x**2])
        assert extrapolate_infinite_size(pts, "quadratic")[0] == pytest.approx(3.872, abs=1e-10)

    def test_linear_keeps_largest_sizes(self):
        n = np.array([20, 80, 150, 330, 480])
        T = 3.9 - 2.0 / np.sqrt(n)
        T[0] += 1.0
        T0, _ = extrapolate_infinite_size(np.column_stack([n, T]))
        assert T0 == pytest.approx(3.9, abs=1e-12)

    def test_weighted_error(self):
        n = np.array([80, 150, 330, 480])
        pts = np.column_stack([n, 3.9 - 2.0 / np.sqrt(n), 0.01 * np.ones(4)])
        T0, err = extrapolate_infinite_size(pts)
        assert T0 == pytest.approx(3.9) and 0.01 < err < 0.2

    def test_too_few(self):
        with pytest.raises(ValueError):
            extrapolate_infinite_size([[80, 3.0], [150, 3.1]], "quadratic")


class TestBinder:
    def test_single_crossing(self):
        x = np.linspace(2.0, 3.0, 11)
        a = Series(x, 0.6 - 0.2 * (x - 2.5))
        b = Series(x, 0.6 - 0.4 * (x - 2.5))
        (c,) = binder_crossing(a, b)
        assert c.estimate == pytest.approx(2.5) and c.lo <= 2.5 <= c.hi

    def test_offset_grids(self):
        a = Series(np.linspace(2.0, 3.0, 11), 0.1 * np.linspace(2.0, 3.0, 11))
        xb = np.linspace(2.05, 3.05, 11)
        b = Series(xb, 0.26 - 0.1 * (xb - 2.5))
        (c,) = binder_crossing(a, b)
        assert c.estimate == pytest.approx(2.55, abs=1e-9)

    def test_multiple_reported(self):
        x = np.linspace(0, 2 * np.pi, 200)
        assert len(binder_crossing(Series(x, np.sin(x) + 0.1), Series(x, np.zeros_like(x)))) == 2

    def test_no_overlap(self):
        with pytest.raises(ValueError):
            binder_crossing(Series([1, 2], [0, 1]), Series([3, 4], [0, 1]))


def test_write_tsv(tmp_path):
    write_tsv(tmp_path / "t.tsv", {"T": [1.0, 2.0], "C": [0.5, 0.25]}, "run 1")
    lines = (tmp_path / "t.tsv").read_text().splitlines()
    assert lines == ["# run 1", "T\tC", "1\t0.5", "2\t0.25"]
