import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from fgpc.analysis import (
    SmoothnessClass,
    aliasing_bound,
    coefficient_bound,
    condition_number_theta,
    fpsq_error_bounds,
    fpsq_error_norm,
    interpolation_error_factors,
    power_fit,
    psi_benchmark_error,
    reconstruction_integral_error,
    sg_leading_coefficient,
    truncation_bound,
    zeta,
)
from fgpc.analysis import test_corpus as corpus
from fgpc.errors import DomainError
from fgpc.fourier import PeriodicGrid
from fgpc.gegenbauer import gegenbauer_eval

SMOOTH = ["f1", "f2", "f3", "f4", "f5"]
ALL = [f"f{i}" for i in range(1, 13)]


class TestPowerFit:
    @given(a=st.floats(1e-3, 1e3), b=st.floats(-6, 2))
    @settings(max_examples=30)
    def test_recovers_exact_law(self, a, b):
        x = np.array([10.0, 20.0, 40.0, 80.0])
        fit = power_fit(x, a * x ** b)
        assert fit.b == pytest.approx(b, abs=1e-9)
        assert fit.a == pytest.approx(a, rel=1e-8)
        assert fit.rss <= 1e-18

    def test_call(self):
        fit = power_fit([1, 2, 4], [3, 12, 48])
        assert fit(3.0) == pytest.approx(27.0)

    @pytest.mark.parametrize("xs, ys", [([1, 2], [1, 2]), ([1, 2, 3], [1, -1, 2]), ([0, 1, 2], [1, 1, 1])])
    def test_rejects(self, xs, ys):
        with pytest.raises(DomainError):
            power_fit(xs, ys)


class TestZeta:
    @pytest.mark.parametrize("p, exact", [(2, math.pi ** 2 / 6), (4, math.pi ** 4 / 90), (6, math.pi ** 6 / 945)])
    def test_even_values(self, p, exact):
        assert zeta(p) == pytest.approx(exact, rel=1e-15)

    @pytest.mark.parametrize("p", [1.5, 3.0, 7.0])
    def test_against_partial_sum(self, p):
        n = 200000
        k = np.arange(1, n, dtype=float)
        # integral tail plus the midpoint half term
        oracle = math.fsum(k ** -p) + n ** (1 - p) / (p - 1) + 0.5 * n ** -p
        assert zeta(p) == pytest.approx(oracle, rel=1e-12)

    def test_domain(self):
        with pytest.raises(DomainError):
            zeta(1.0)


class TestBounds:
    @pytest.mark.parametrize("s", range(6))
    def test_tight_below_relaxed(self, s):
        for N in (10, 100, 1000):
            nu1, nu2, nu3 = interpolation_error_factors(s, N)
            assert nu1 <= nu2
            assert aliasing_bound(s, 1.0, N, 1.0) <= aliasing_bound(s, 1.0, N, 1.0, relaxed=True)

    @pytest.mark.parametrize("s", range(6))
    def test_factors_decrease_in_N(self, s):
        f = np.array([interpolation_error_factors(s, N)[:2] for N in range(10, 400, 10)])
        assert np.all(np.diff(f, axis=0) < 0)

    @pytest.mark.parametrize("s", range(6))
    def test_asymptotic_limit(self, s):
        _, nu2, nu3 = interpolation_error_factors(s, 10 ** 12)
        assert nu3 / nu2 == pytest.approx(1.0, abs=1e-5)

    def test_large_s_limit(self):
        assert interpolation_error_factors(40, 100)[2] == pytest.approx(1 / math.sqrt(math.pi), rel=1e-2)

    def test_coefficient_bound_dominates(self):
        for name in ALL:
            f = corpus()[name]
            for kk in (1, 3, 7, 21):
                exact = abs(quad(lambda x: f(x) * np.cos(2 * np.pi * kk * x), 0, 1, limit=200, points=f.jumps[:-1] or None)[0]
                            - 1j * quad(lambda x: f(x) * np.sin(2 * np.pi * kk * x), 0, 1, limit=200, points=f.jumps[:-1] or None)[0])
                assert exact <= coefficient_bound(f.smoothness.s, f.smoothness.bv_norm, kk, 1.0) * (1 + 1e-9)

    def test_truncation_scaling(self):
        a = truncation_bound(2, 1.0, 100, 1.0)
        b = truncation_bound(2, 1.0, 200, 1.0)
        assert a / b == pytest.approx(2 ** 2.5)

    @pytest.mark.parametrize("name", ALL)
    @pytest.mark.parametrize("N", [20, 100, 400])
    def test_bounds_dominate_measured(self, name, N):
        f = corpus()[name]
        err = fpsq_error_norm(f, N)
        tight, relaxed, _ = fpsq_error_bounds(f.smoothness.s, f.smoothness.bv_norm, N, 1.0)
        assert err <= tight <= relaxed

    def test_domain(self):
        with pytest.raises(DomainError):
            coefficient_bound(1, 1.0, 0, 1.0)
        with pytest.raises(DomainError):
            SmoothnessClass(1.5)


class TestLeadingCoefficient:
    def test_legendre_quadratic(self):
        # (3 x^2 - 1) / 2 on [-1, 1] shifted onto a width-2 interval
        assert sg_leading_coefficient(0.5, 2, 2.0) == pytest.approx(1.5, rel=1e-14)

    @pytest.mark.parametrize("alpha", [-0.1, 0.5, 2.0])
    @pytest.mark.parametrize("j", [1, 3, 6])
    def test_against_polynomial_fit(self, alpha, j):
        x = np.cos(np.linspace(0, np.pi, 2 * j + 3))
        coef = np.polynomial.polynomial.polyfit(x, gegenbauer_eval(alpha, j, x), j)
        assert sg_leading_coefficient(alpha, j, 2.0) == pytest.approx(coef[-1], rel=1e-9)

    @given(L=st.floats(0.1, 10.0), j=st.integers(1, 12))
    def test_width_scaling(self, L, j):
        ratio = sg_leading_coefficient(0.5, j, L) / sg_leading_coefficient(0.5, j, 2.0)
        assert ratio == pytest.approx((2.0 / L) ** j, rel=1e-12)

    def test_domain(self):
        assert sg_leading_coefficient(0.3, 0, 1.0) == 1.0
        with pytest.raises(DomainError):
            sg_leading_coefficient(-0.5, 2, 1.0)
        with pytest.raises(DomainError):
            sg_leading_coefficient(0.5, -1, 1.0)


class TestCorpus:
    def test_names(self):
        assert list(corpus()) == ALL

    @pytest.mark.parametrize("name", ALL)
    def test_integral_matches_quadrature(self, name):
        f = corpus()[name]
        for x in (0.1, 0.37, 0.62, 0.9, 1.0):
            pts = [p for p in f.jumps if p < x] or None
            assert f.integral(x) == pytest.approx(quad(f, 0, x, points=pts, limit=200)[0], abs=1e-12)

    @pytest.mark.parametrize("name", SMOOTH)
    def test_periodic_smoothness(self, name):
        f = corpus()[name]
        p = f.f
        s = f.smoothness.s
        for d in range(s):
            q = p.deriv(d)
            assert q(0.0) == pytest.approx(q(1.0), abs=1e-12)
        top = p.deriv(s)
        x = np.linspace(0, 1, 2001)
        variation = np.abs(np.diff(top(x))).sum() + abs(top(0.0) - top(1.0))
        assert variation == pytest.approx(f.smoothness.bv_norm, rel=1e-9)

    @pytest.mark.parametrize("name", ALL[5:])
    def test_piecewise_variation(self, name):
        f = corpus()[name]
        lv = list(f.levels)
        # around the circle every jump is traversed once
        assert f.smoothness.bv_norm == pytest.approx(sum(abs(a - b) for a, b in zip(lv, lv[1:] + lv[:1])))

    @pytest.mark.parametrize("name", ALL[5:])
    def test_jumps_and_levels(self, name):
        f = corpus()[name]
        assert len(f.jumps) == 2 and f.jumps[0] < f.jumps[1] <= 1.0
        assert (f.jumps[1] == 1.0) == (name in ("f6", "f7", "f8", "f9"))
        eps = 1e-9
        assert f(f.jumps[0] - eps) != f(f.jumps[0] + eps)
        assert f(0.0) == f.levels[0]


class TestConditionNumber:
    def test_two_point(self):
        assert condition_number_theta(PeriodicGrid(1.0, 2)) == pytest.approx(1.0, rel=1e-14)

    @pytest.mark.parametrize("N", [8, 32, 64])
    def test_period_invariant(self, N):
        a = condition_number_theta(PeriodicGrid(1.0, N))
        b = condition_number_theta(PeriodicGrid(7.5, N))
        assert a == pytest.approx(b, rel=1e-10)

    def test_grows_with_N(self):
        c = [condition_number_theta(PeriodicGrid(1.0, N)) for N in (8, 16, 32, 64)]
        assert np.all(np.diff(c) > 0)


class TestDemonstrations:
    def test_square_wave_reconstruction(self):
        assert reconstruction_integral_error(corpus()["f6"], 100, 100) == pytest.approx(7.754e-3, rel=1e-3)

    def test_psi_unperturbed(self):
        assert psi_benchmark_error() <= 1e-13

    def test_psi_perturbed(self):
        err = psi_benchmark_error(delta=(-1e-5, 1e-6))
        # the misplaced jump contributes its height times the offset
        assert 1e-6 <= err <= 1e-4
