"""Jump detection and two-level reconstruction from a Fourier interpolant.

The interpolant is sampled at ``M`` equispaced points ``y_l = l T / (M - 1)``
(both ends included).  Samples near the separation line (the average of the
refined extrema) flag candidate jumps; otherwise the crossings of that line are
bisected.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DegenerateSignalError, DetectionError, DomainError, NoJumpError
from .fourier import FourierInterpolant, evaluate_interpolant

__all__ = [
    "EdgeConfig",
    "Extrema",
    "ReconstructedPiecewise",
    "sample_points",
    "locate_extrema",
    "detect_edges",
    "reconstruct",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EdgeConfig:
    """Detection settings.

    Parameters
    ----------
    M : int
        Number of evaluation points.
    eps_tilde : float
        Zone radius relative to the extremeshoot height, in ``(0, 0.01]``.
    varepsilon : float, optional
        Proximity tolerance; ``T / (2 M)`` when omitted.
    """

    M: int = 400
    eps_tilde: float = 0.005
    varepsilon: float | None = None

    def __post_init__(self):
        if int(self.M) != self.M or self.M < 4:
            raise DomainError(f"M must be an integer >= 4, got {self.M!r}")
        if not 0 < self.eps_tilde <= 0.01:
            raise DomainError(f"eps_tilde must lie in (0, 0.01], got {self.eps_tilde}")
        if self.varepsilon is not None and self.varepsilon <= 0:
            raise DomainError("varepsilon must be positive")

    def proximity(self, T: float) -> float:
        v = T / (2 * self.M) if self.varepsilon is None else self.varepsilon
        if v >= T / self.M:
            raise DomainError("varepsilon must be smaller than T/M")
        return v


@dataclass(frozen=True)
class Extrema:
    minimum: float
    maximum: float
    argmin: float
    argmax: float

    @property
    def separation(self) -> float:
        return 0.5 * (self.maximum + self.minimum)

    @property
    def height(self) -> float:
        return self.maximum - self.minimum


@dataclass(frozen=True)
class ReconstructedPiecewise:
    """Two-level piecewise-constant model with jumps at ``xi[0] < xi[1]``.

    The middle piece ``[xi[0], xi[1])`` carries the level opposite to the
    outer pieces; ``starts_high`` says whether the outer pieces are high.
    """

    xi: tuple
    level_max: float
    level_min: float
    starts_high: bool
    T: float

    def __post_init__(self):
        a, b = self.xi
        if not a < b:
            raise DomainError("jump points must be strictly increasing")
        if not self.level_max > self.level_min:
            raise DegenerateSignalError("level_max must exceed level_min")

    @property
    def outer_level(self) -> float:
        return self.level_max if self.starts_high else self.level_min

    @property
    def inner_level(self) -> float:
        return self.level_min if self.starts_high else self.level_max

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        inner = (t >= self.xi[0]) & (t < self.xi[1])
        out = np.where(inner, self.inner_level, self.outer_level)
        return float(out) if out.ndim == 0 else out


def sample_points(T: float, M: int) -> np.ndarray:
    return np.linspace(0.0, T, M)


def _refine(interp, y, d, sign):
    T = interp.grid.T
    h = y[1] - y[0]
    lo, hi = y[d] - h, y[d] + h
    res = minimize_scalar(lambda t: sign * evaluate_interpolant(interp, t), bounds=(lo, hi),
                          method="bounded", options={"xatol": 1e-10 * T})
    coarse = sign * evaluate_interpolant(interp, y[d])
    if res.fun < coarse:
        return float(res.x) % T, sign * float(res.fun)
    return float(y[d]), sign * coarse


def locate_extrema(interp: FourierInterpolant, M: int, values=None) -> Extrema:
    """Global extrema of the interpolant: coarse scan then bounded refinement."""
    T = interp.grid.T
    y = sample_points(T, M)
    F = evaluate_interpolant(interp, y) if values is None else values
    x_min, v_min = _refine(interp, y, int(np.argmin(F)), 1.0)
    x_max, v_max = _refine(interp, y, int(np.argmax(F)), -1.0)
    if v_max - v_min < 1e-13 * max(abs(v_max), 1e-300):
        raise NoJumpError("interpolant is numerically flat")
    return Extrema(v_min, v_max, x_min, x_max)


def _cluster_candidates(idx, dist):
    """Collapse runs of consecutive indices to the member nearest the line."""
    if idx.size == 0:
        return idx
    groups = np.split(idx, np.where(np.diff(idx) > 1)[0] + 1)
    return np.array([g[np.argmin(dist[g])] for g in groups])


def _interval_is_far(point, a, b, tol):
    return (a - point > tol) or (point - b > tol)


def detect_edges(interp: FourierInterpolant, config: EdgeConfig = EdgeConfig(),
                 *, extrema: Extrema | None = None, values=None) -> np.ndarray:
    """Estimate the two jump points of a two-level periodic signal.

    Returns
    -------
    numpy.ndarray
        Sorted jump estimates in ``(0, T]``.

    Raises
    ------
    DetectionError
        When the crossings of the separation line do not give two jumps.
    """
    T = interp.grid.T
    M = config.M
    y = sample_points(T, M)
    F = evaluate_interpolant(interp, y) if values is None else np.asarray(values)
    ext = locate_extrema(interp, M, F) if extrema is None else extrema
    mu = ext.separation
    eps = config.eps_tilde * ext.height
    tol = config.proximity(T)

    d1 = np.abs(F - mu)
    lam = _cluster_candidates(np.flatnonzero(d1 <= eps), d1)
    # a candidate on the last interval is the jump at the period end
    at_end = lam == M - 2
    lam = np.unique(np.where(at_end, M - 1, lam))
    xi = [float(y[i]) for i in lam]

    if len(lam) < 2:
        aux = F >= mu
        J = np.flatnonzero(aux[:-1] != aux[1:])
        if J.size != 2:
            raise DetectionError(f"expected two crossings of the separation line, found {J.size}")
        end_added = False
        if J[1] == M - 2 and not at_end.any():
            xi.append(T)
            end_added = True
        if len(xi) < 2:
            mids = [0.5 * (y[j] + y[j + 1]) for j in J]
            if not lam.size and not end_added:
                xi = mids
            else:
                known = list(xi)
                for j, m in zip(J, mids):
                    if all(_interval_is_far(p, y[j], y[j + 1], tol) for p in known):
                        xi.append(float(m))

    xi = np.sort(np.asarray(xi, dtype=float))
    if xi.size > 2:
        log.warning("%d jump candidates found; keeping the two farthest apart", xi.size)
        xi = np.array([xi[0], xi[-1]])
    if xi.size < 2:
        raise DetectionError(f"located only {xi.size} jump point(s)")
    return xi


def reconstruct(interp: FourierInterpolant, config: EdgeConfig = EdgeConfig()) -> ReconstructedPiecewise:
    """Detect the jumps and fit the two levels by medians of the samples."""
    T = interp.grid.T
    y = sample_points(T, config.M)
    F = evaluate_interpolant(interp, y)
    ext = locate_extrema(interp, config.M, F)
    xi = detect_edges(interp, config, extrema=ext, values=F)
    mu = ext.separation
    up, down = F[F > mu], F[F < mu]
    if up.size == 0 or down.size == 0:
        raise DegenerateSignalError("no samples on one side of the separation line")
    return ReconstructedPiecewise(
        xi=(float(xi[0]), float(xi[1])),
        level_max=float(np.median(up)),
        level_min=float(np.median(down)),
        starts_high=bool(F[0] > mu),
        T=T,
    )
