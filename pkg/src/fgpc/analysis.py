"""Error bounds, observed-order fits, the test-function corpus and condition numbers."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.special import gammaln

from .errors import DomainError
from .fourier import FourierInterpolant, PeriodicGrid, build_fim_fast

__all__ = [
    "PowerFit",
    "SmoothnessClass",
    "CorpusFunction",
    "power_fit",
    "zeta",
    "coefficient_bound",
    "truncation_bound",
    "aliasing_bound",
    "interpolation_error_factors",
    "fpsq_error_bounds",
    "sg_leading_coefficient",
    "test_corpus",
    "fpsq_error_norm",
    "condition_number_theta",
    "reconstruction_integral_error",
    "psi_benchmark",
    "psi_benchmark_error",
]


@dataclass(frozen=True)
class PowerFit:
    """Least-squares fit ``y = a x^b`` in log-log coordinates."""

    a: float
    b: float
    rss: float

    def __call__(self, x):
        return self.a * np.asarray(x, dtype=float) ** self.b


def power_fit(xs, ys) -> PowerFit:
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or x.size < 3:
        raise DomainError("power_fit needs at least three paired points")
    if np.any(x <= 0) or np.any(y <= 0):
        raise DomainError("power_fit needs positive data")
    lx, ly = np.log(x), np.log(y)
    A = np.column_stack([lx, np.ones_like(lx)])
    (m, B), *_ = np.linalg.lstsq(A, ly, rcond=None)
    rss = float(np.sum((A @ [m, B] - ly) ** 2))
    return PowerFit(float(np.exp(B)), float(m), rss)


# Bernoulli numbers B_2, B_4, B_6, B_8 for the Euler-Maclaurin tail
_BERNOULLI = (1 / 6, -1 / 30, 1 / 42, -1 / 30)


def zeta(p: float, terms: int = 64) -> float:
    """Riemann zeta for real ``p > 1`` by partial sums plus an Euler-Maclaurin tail."""
    if not p > 1:
        raise DomainError("zeta needs p > 1")
    n = terms
    head = math.fsum(k ** -p for k in range(1, n))
    tail = n ** (1 - p) / (p - 1) + 0.5 * n ** -p
    # derivative factor p (p+1) ... (p + 2j - 2) and 1/(2j)!
    rising, fact = p, 2.0
    for j, b in enumerate(_BERNOULLI, start=1):
        tail += b / fact * rising * n ** (-p - 2 * j + 1)
        rising *= (p + 2 * j - 1) * (p + 2 * j)
        fact *= (2 * j + 1) * (2 * j + 2)
    return head + tail


def _omega(k, T):
    return 2 * np.pi * k / T


def _check_s(s):
    if int(s) != s or s < 0:
        raise DomainError(f"smoothness index must be a non-negative integer, got {s!r}")
    return int(s)


@dataclass(frozen=True)
class SmoothnessClass:
    """``f`` has ``s`` periodic derivatives with ``f^(s)`` of bounded variation."""

    s: int
    bv_norm: float | None = None

    def __post_init__(self):
        _check_s(self.s)


def coefficient_bound(s: int, bv_norm: float, k: int, T: float) -> float:
    """Upper bound ``bv / (T w_|k|^(s+1))`` on ``|f_hat_k|``, ``k != 0``."""
    s = _check_s(s)
    if k == 0:
        raise DomainError("the coefficient bound needs k != 0")
    return bv_norm / (T * _omega(abs(k), T) ** (s + 1))


def truncation_bound(s: int, bv_norm: float, N: int, T: float) -> float:
    """Bound on the L2 norm of the series tail beyond ``|k| = N/2``."""
    s = _check_s(s)
    return bv_norm / (math.sqrt((2 * s + 1) * math.pi) * _omega(N / 2, T) ** (s + 0.5))


def _zeta_term(s, N, relaxed):
    z = 1 + 1 / (2 ** (2 * s + 1) - 1) if relaxed else zeta(2 * s + 2)
    return math.sqrt(z + 1 / N) + 1 / math.sqrt(N)


def aliasing_bound(s: int, bv_norm: float, N: int, T: float, *, relaxed: bool = False) -> float:
    """Bound on the L2 norm of the aliasing error."""
    s = _check_s(s)
    return _zeta_term(s, N, relaxed) * bv_norm * _omega(N / 2, T) ** (-s - 0.5) / math.sqrt(math.pi)


def interpolation_error_factors(s: int, N: int):
    """The tight, relaxed and asymptotic interpolation-error factors."""
    s = _check_s(s)
    base = 1 / (2 * s + 1)
    nu1 = math.sqrt((base + _zeta_term(s, N, False) ** 2) / math.pi)
    nu2 = math.sqrt((base + _zeta_term(s, N, True) ** 2) / math.pi)
    nu3 = math.sqrt((1 + base + 1 / (2 ** (2 * s + 1) - 1)) / math.pi)
    return nu1, nu2, nu3


def fpsq_error_bounds(s: int, bv_norm: float, N: int, T: float):
    """Euclidean-norm bounds on the quadrature error over all grid nodes."""
    grid = PeriodicGrid(T, N)
    shape = bv_norm * _omega(N / 2, T) ** (-s - 0.5) * math.sqrt(grid.nodes.sum())
    return tuple(nu * shape for nu in interpolation_error_factors(s, N))


def sg_leading_coefficient(alpha: float, j: int, length: float) -> float:
    """Leading coefficient of the degree-``j`` shifted Gegenbauer polynomial.

    The partition has width ``length``; the polynomial is standardized to 1
    at the right endpoint.
    """
    if not alpha > -0.5:
        raise DomainError("alpha must exceed -1/2")
    if j < 0:
        raise DomainError("degree must be non-negative")
    if j == 0:
        return 1.0
    logk = ((2 * j - 1) * math.log(2) - j * math.log(length)
            + gammaln(2 * alpha + 1) + gammaln(j + alpha)
            - gammaln(alpha + 1) - gammaln(j + 2 * alpha))
    return float(np.exp(logk))


@dataclass(frozen=True)
class CorpusFunction:
    """Test function on ``[0, 1)`` with its running integral.

    ``jumps`` lists discontinuities in ``(0, 1]`` and ``levels`` the constant
    values on the pieces they delimit (piecewise-constant members only).
    """

    name: str
    f: Callable = field(repr=False)
    antiderivative: Callable = field(repr=False)
    smoothness: SmoothnessClass
    jumps: tuple = ()
    levels: tuple = ()
    note: str = ""

    def __call__(self, x):
        return self.f(np.asarray(x, dtype=float))

    def integral(self, x):
        """``int_0^x f`` for ``x`` in ``[0, 1]``."""
        return self.antiderivative(np.asarray(x, dtype=float))


def _poly_entry(name, coeffs, s, bv, note):
    p = np.polynomial.Polynomial(coeffs)
    P = p.integ()
    return CorpusFunction(name, p, lambda x: P(x) - P(0.0), SmoothnessClass(s, bv), note=note)


def _piecewise_entry(name, breaks, levels, bv, note):
    # levels are constant on [breaks[i], breaks[i+1]); the final level also holds at x = 1
    b = np.asarray(breaks, dtype=float)
    v = np.asarray(levels, dtype=float)
    cum = np.concatenate([[0.0], np.cumsum(v * np.diff(b))])

    def f(x):
        i = np.clip(np.searchsorted(b, x, side="right") - 1, 0, v.size - 1)
        return v[i]

    def F(x):
        i = np.clip(np.searchsorted(b, x, side="right") - 1, 0, v.size - 1)
        return cum[i] + v[i] * (x - b[i])

    jumps = tuple(float(t) for t in b[1:-1]) + ((1.0,) if v[0] != v[-1] else ())
    return CorpusFunction(name, f, F, SmoothnessClass(0, bv), jumps, tuple(float(z) for z in v), note)


def _f6():
    def f(x):
        x = np.asarray(x, dtype=float)
        return np.where((x < 0.5) | (x == 1.0), 1.0, 0.0)

    def F(x):
        return np.minimum(x, 0.5)

    return CorpusFunction("f6", f, F, SmoothnessClass(0, 2.0), (0.5, 1.0), (1.0, 0.0),
                          "square wave; two unit jumps per period")


def test_corpus() -> dict:
    """The twelve named test functions, keyed ``"f1"`` ... ``"f12"``.

    BV constants are total variations of ``f^(s)`` around the circle, i.e.
    including the jump of ``f^(s)`` across ``x = 1``.
    """
    pi, e, ln = math.pi, math.e, math.log
    out = {
        "f1": _poly_entry("f1", [0, 1, -1], 1, 4.0, "f' = 1 - 2x: variation 2 plus wrap jump 2"),
        "f2": _poly_entry("f2", [1, 1 / 6, -1 / 2, 1 / 3], 2, 4.0, "f'' = 2x - 1: 2 plus 2"),
        "f3": _poly_entry("f3", [0, 0, 1, -2, 1], 3, 48.0, "f''' = 24x - 12: 24 plus 24"),
        "f4": _poly_entry("f4", [2, 1 / 6, 0, -5 / 3, 15 / 6, -1], 4, 240.0,
                          "f'''' = 60 - 120x: 120 plus 120"),
        "f5": _poly_entry("f5", [-1, 0, 1 / 2, 0, -5 / 2, 3, -1], 5, 1440.0,
                          "f^(5) = 360 - 720x: 720 plus 720"),
        "f6": _f6(),
        "f7": _piecewise_entry("f7", [0, 1 / 3, 1], [1, 0], 2.0, "jumps 1 at 1/3 and at 1"),
        "f8": _piecewise_entry("f8", [0, 2 / 3, 1], [4, 0], 8.0, "jumps 4 at 2/3 and at 1"),
        "f9": _piecewise_entry("f9", [0, 0.8183, 1], [-5, 0], 10.0, "jumps 5 at 0.8183 and at 1"),
        "f10": _piecewise_entry("f10", [0, pi / 5, pi / 4, 1], [2, 1, 2], 2.0, "two unit jumps"),
        "f11": _piecewise_entry("f11", [0, e / 5, e / 3, 1], [10, -2, 10], 24.0, "two jumps of 12"),
        "f12": _piecewise_entry("f12", [0, ln(1.5), ln(2), 1], [-3, 2, -3], 10.0, "two jumps of 5"),
    }
    return out


def fpsq_error_norm(func: CorpusFunction, N: int, T: float = 1.0) -> float:
    """Euclidean norm over the nodes of the quadrature error of ``Theta f``."""
    grid = PeriodicGrid(T, N)
    x = grid.nodes
    approx = build_fim_fast(grid).theta @ func(x)
    return float(np.linalg.norm(approx - func.integral(x)))


def condition_number_theta(grid: PeriodicGrid) -> float:
    """2-norm condition number of ``Theta`` with its zero row removed.

    Ratio of the largest to the smallest nonzero singular value.
    """
    A = build_fim_fast(grid).theta[1:]
    sv = np.linalg.svd(A, compute_uv=False)
    sv = sv[sv > sv[0] * 1e-15 * max(A.shape)]
    return float(sv[0] / sv[-1])


def reconstruction_integral_error(func: CorpusFunction, N: int, M: int) -> float:
    """Max over the nodes of ``|int_0^x f - int_0^x f_rec|`` for the two-level reconstruction.

    Both running integrals are exact: ``f`` through its antiderivative and the
    reconstruction piece by piece.
    """
    from .edges import EdgeConfig, reconstruct

    grid = PeriodicGrid(1.0, N)
    rec = reconstruct(FourierInterpolant.from_function(func, grid), EdgeConfig(M))
    x = grid.nodes
    a, b = rec.xi
    inner = np.clip(x, a, b) - a
    rec_int = rec.outer_level * (x - inner) + rec.inner_level * inner
    return float(np.max(np.abs(func.integral(x) - rec_int)))


def psi_benchmark(xi, s_in: float = 3.0, mu_max: float = 1.0, k_s: float = 2.5):
    """Piecewise-smooth ``psi(s(t), u(t))`` with jumps at ``xi`` for quadrature tests.

    ``s`` is a closed-form continuous profile and ``u`` switches between 0 and 2
    on ``[xi_1, xi_2)``, mimicking a corrected chemostat trajectory.
    """
    x1, x2 = float(xi[0]), float(xi[1])
    peak = (2 / 3) * (x1 + 1)

    def s(t):
        return np.where(t < x1, (2 / 3) * (t + 1),
                        np.where(t < x2, peak - (t - x1) ** 2 / 10,
                                 np.sin((t - x2) / 4) - (x2 - x1) ** 2 / 10 + peak))

    def psi(t):
        t = np.asarray(t, dtype=float)
        st = s(t)
        u = np.where((t >= x1) & (t < x2), 2.0, 0.0)
        nu = mu_max * st / (k_s * (s_in - st) + st)
        return (u - nu) * (s_in - st)

    return psi


def psi_benchmark_error(xi=(math.e, 6.0), *, delta=(0.0, 0.0), T: float = 10.0,
                        degrees=(18, 18, 18), alpha: float = 0.5, n_targets: int = 100) -> float:
    """Max error of partitioned SG integration of :func:`psi_benchmark`.

    The integrand keeps its jumps at ``xi`` while the partition is cut at
    ``xi - delta``, as when the switches come from an edge detector.  The
    reference running integrals come from adaptive quadrature.
    """
    from .gegenbauer import MeshPartition, piecewise_integrate

    xi = np.asarray(xi, dtype=float)
    y = T * np.arange(1, n_targets + 1) / n_targets
    f = psi_benchmark(xi)
    br = [0.0, *xi, T]

    def q(a, b):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", IntegrationWarning)
            return quad(f, a, b, epsabs=1e-15, epsrel=1e-15, limit=200)[0]

    cum = [0.0]
    for a, b in zip(br[:-1], br[1:]):
        cum.append(cum[-1] + q(a, b))
    loc = np.clip(np.searchsorted(br, y, side="left") - 1, 0, 2)
    exact = np.array([cum[k] + q(br[k], t) for k, t in zip(loc, y)])
    xt = xi - np.asarray(delta, dtype=float)
    approx = piecewise_integrate(f, MeshPartition([0.0, *xt, T]), degrees, alpha, y)
    return float(np.max(np.abs(approx - exact)))
