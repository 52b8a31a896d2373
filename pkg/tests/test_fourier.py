import time

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fgpc.analysis import test_corpus as corpus
from fgpc.errors import DimensionError, DomainError, GridError
from fgpc.fourier import (
    FourierInterpolant,
    PeriodicGrid,
    build_fim_direct,
    build_fim_fast,
    build_rect_fim,
    check_twin_symmetry,
    dft_coefficients,
    evaluate_interpolant,
    fpsq,
    interpolation_matrix,
    inverse_dft,
    wavenumbers,
)

even_N = st.integers(1, 32).map(lambda n: 2 * n)


class TestGrid:
    def test_nodes(self):
        g = PeriodicGrid(2.0, 4)
        np.testing.assert_allclose(g.nodes, [0, 0.5, 1.0, 1.5])
        assert g.spacing == 0.5

    @pytest.mark.parametrize("N", [7, 0, 1, 2.5])
    def test_rejects_bad_N(self, N):
        with pytest.raises(GridError):
            PeriodicGrid(1.0, N)

    def test_odd_message(self):
        with pytest.raises(GridError, match="N must be even"):
            PeriodicGrid(1.0, 7)

    @pytest.mark.parametrize("T", [0.0, -1.0, np.inf])
    def test_rejects_bad_T(self, T):
        with pytest.raises(GridError):
            PeriodicGrid(T, 4)

    def test_window(self):
        np.testing.assert_array_equal(wavenumbers(6), [-3, -2, -1, 0, 1, 2])


class TestDFT:
    def test_constant(self):
        g = PeriodicGrid(3.0, 8)
        c = dft_coefficients(np.full(8, 2.5), g)
        k = wavenumbers(8)
        assert c[k == 0][0] == pytest.approx(2.5)
        assert np.max(np.abs(c[k != 0])) < 1e-14

    @pytest.mark.parametrize("N", [4, 6, 10, 32])
    def test_single_mode(self, N):
        g = PeriodicGrid(2.0, N)
        c = dft_coefficients(np.cos(2 * np.pi * g.nodes / g.T), g)
        k = wavenumbers(N)
        np.testing.assert_allclose(c[np.abs(k) == 1], 0.5, atol=1e-12)
        assert np.max(np.abs(c[np.abs(k) != 1])) < 1e-12

    def test_square_wave_parity(self):
        g = PeriodicGrid(1.0, 10)
        c = dft_coefficients(corpus()["f6"](g.nodes), g)
        k = wavenumbers(10)
        even = (k != 0) & (k % 2 == 0)
        assert np.max(np.abs(c[even])) < 1e-14
        odd = np.abs(c[(k > 0) & (k % 2 == 1)])
        assert np.all(np.diff(odd) < 0)

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            dft_coefficients(np.ones(5), PeriodicGrid(1.0, 6))

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            dft_coefficients(np.ones(4), PeriodicGrid(1.0, 4), method="slow")

    @given(N=even_N, seed=st.integers(0, 2**32 - 1))
    def test_round_trip(self, N, seed):
        g = PeriodicGrid(1.7, N)
        v = np.random.default_rng(seed).standard_normal(N)
        np.testing.assert_allclose(inverse_dft(dft_coefficients(v, g), g), v, atol=1e-12)

    @given(N=even_N, seed=st.integers(0, 2**32 - 1))
    def test_fft_agrees(self, N, seed):
        g = PeriodicGrid(1.0, N)
        v = np.random.default_rng(seed).standard_normal(N)
        np.testing.assert_allclose(dft_coefficients(v, g, method="fft"), dft_coefficients(v, g), atol=1e-12)

    @given(N=even_N, seed=st.integers(0, 2**32 - 1))
    def test_conjugate_symmetry(self, N, seed):
        g = PeriodicGrid(1.0, N)
        c = dft_coefficients(np.random.default_rng(seed).standard_normal(N), g)
        # index i holds k = i - N/2; pair k with -k for |k| < N/2
        h = N // 2
        for k in range(1, h):
            assert abs(c[h + k] - np.conj(c[h - k])) < 1e-12


class TestInterpolant:
    def test_reproduces_nodes(self, rng):
        g = PeriodicGrid(2.0, 12)
        v = rng.standard_normal(12)
        np.testing.assert_allclose(FourierInterpolant(g, v)(g.nodes), v, atol=0)

    def test_periodic_images_snap(self):
        g = PeriodicGrid(1.0, 8)
        v = np.arange(8.0)
        interp = FourierInterpolant(g, v)
        assert evaluate_interpolant(interp, 1.0) == v[0]
        assert evaluate_interpolant(interp, 2.25) == v[2]

    def test_matches_coefficient_form(self, rng):
        g = PeriodicGrid(3.0, 16)
        interp = FourierInterpolant(g, rng.standard_normal(16))
        x = rng.uniform(0, 3, 25)
        w = 2 * np.pi * wavenumbers(16) / 3.0
        # the Lagrange form symmetrizes the Nyquist mode into a cosine
        c = interp.coefficients.copy()
        series = np.exp(1j * np.outer(x, w)) @ c
        nyq = c[0] * (np.cos(w[0] * x) - np.exp(1j * w[0] * x))
        np.testing.assert_allclose(interp(x), (series + nyq).real, atol=1e-12)
        assert np.max(np.abs((series + nyq).imag)) < 1e-10

    def test_square_wave_midpoint_zero(self):
        g = PeriodicGrid(1.0, 100)
        assert evaluate_interpolant(FourierInterpolant.from_function(corpus()["f6"], g), 0.5) == 0.0

    def test_table_value_f7(self):
        g = PeriodicGrid(1.0, 100)
        v = evaluate_interpolant(FourierInterpolant.from_function(corpus()["f7"], g), 1 / 3)
        assert v == pytest.approx(0.6887, abs=5e-5)

    def test_read_only(self):
        interp = FourierInterpolant(PeriodicGrid(1.0, 4), np.ones(4))
        with pytest.raises(ValueError):
            interp.values[0] = 2.0

    def test_interpolation_matrix_rows_sum_to_one(self, rng):
        g = PeriodicGrid(1.0, 10)
        F = interpolation_matrix(g, rng.uniform(-1, 2, 30))
        np.testing.assert_allclose(F.sum(axis=1), 1.0, atol=1e-12)


class TestFIM:
    def test_smallest_grid(self):
        th = build_fim_direct(PeriodicGrid(1.0, 2)).theta
        assert np.all(th[0] == 0)
        # the row integrates constants exactly (sum = x_1) and its twins are equal
        np.testing.assert_allclose(th[1], [0.25, 0.25], atol=1e-15)

    def test_cosine_antiderivative(self):
        g = PeriodicGrid(1.0, 100)
        th = build_fim_direct(g).theta
        x = g.nodes
        np.testing.assert_allclose(th @ np.cos(2 * np.pi * x), np.sin(2 * np.pi * x) / (2 * np.pi), atol=1e-12)

    @pytest.mark.parametrize("N", list(range(10, 42, 2)))
    def test_fast_equals_direct(self, N):
        g = PeriodicGrid(1.3, N)
        fast, direct = build_fim_fast(g).theta, build_fim_direct(g).theta
        assert np.max(np.abs(fast - direct)) <= 1e-13
        assert np.all(fast[0] == 0)
        assert check_twin_symmetry(fast)

    def test_direct_twins_near_exact(self):
        assert check_twin_symmetry(build_fim_direct(PeriodicGrid(1.0, 20)).theta, atol=1e-14)

    def test_check_detects_broken_twins(self):
        th = build_fim_fast(PeriodicGrid(1.0, 12)).theta.copy()
        th[5, 1] += 1e-9
        assert not check_twin_symmetry(th)

    def test_period_row_and_reduced(self):
        fim = build_fim_fast(PeriodicGrid(2.0, 8))
        np.testing.assert_array_equal(fim.period_row, np.full(8, 0.25))
        assert fim.reduced.shape == (7, 8)

    @given(N=st.integers(2, 20).map(lambda n: 2 * n))
    def test_exponentials_integrated_exactly(self, N):
        g = PeriodicGrid(2.0, N)
        th = build_fim_fast(g).theta
        x = g.nodes
        for k in range(-(N // 2) + 1, N // 2):
            w = 2 * np.pi * k / g.T
            f = np.exp(1j * w * x)
            F = x if k == 0 else (np.exp(1j * w * x) - 1) / (1j * w)
            assert np.max(np.abs(th @ f - F)) < 1e-12

    def test_constant(self):
        fim = build_fim_fast(PeriodicGrid(4.0, 10))
        assert fpsq(fim.period_row, np.full(10, 3.0)) == pytest.approx(12.0)
        np.testing.assert_allclose(fpsq(fim, np.full(10, 3.0)), 3.0 * fim.grid.nodes, atol=1e-13)

    def test_speed(self):
        g = PeriodicGrid(1.0, 120)

        def best(fn):
            out = []
            for _ in range(2):
                t = time.perf_counter()
                fn(g)
                out.append(time.perf_counter() - t)
            return min(out)

        assert best(build_fim_fast) <= 0.5 * best(build_fim_direct)


class TestRectFIM:
    def test_target_T(self):
        r = build_rect_fim(PeriodicGrid(3.0, 6), [3.0])
        np.testing.assert_array_equal(r.theta_hat, np.full((1, 6), 0.5))

    def test_nodes_match_square(self):
        g = PeriodicGrid(1.5, 16)
        r = build_rect_fim(g, g.nodes[1:])
        np.testing.assert_allclose(r.theta_hat, build_fim_fast(g).theta[1:], atol=1e-12)

    def test_off_grid_cosine(self):
        g = PeriodicGrid(2.0, 64)
        r = build_rect_fim(g, [g.T / 3])
        f = np.cos(2 * np.pi * g.nodes / g.T)
        assert fpsq(r, f)[0] == pytest.approx(np.sin(2 * np.pi / 3) * g.T / (2 * np.pi), abs=1e-12)

    @pytest.mark.parametrize("bad", [0.0, -0.1, 2.0001])
    def test_domain(self, bad):
        with pytest.raises(DomainError):
            build_rect_fim(PeriodicGrid(2.0, 8), [1.0, bad])

    def test_fpsq_dimension(self):
        with pytest.raises(DimensionError):
            fpsq(np.ones((2, 4)), np.ones(5))
