"""Fourier interpolation and Fourier pseudospectral integration matrices.

All transforms use the index window ``k = -N/2, ..., N/2 - 1``.  Summing over
this window is the same as the symmetric sum over ``|k| <= N/2`` with the
``k = N/2`` term dropped, so the "primed" convention is applied in exactly one
place: :func:`wavenumbers`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, DomainError, GridError

__all__ = [
    "PeriodicGrid",
    "FourierInterpolant",
    "FIMatrix",
    "RectFIMatrix",
    "wavenumbers",
    "dft_coefficients",
    "inverse_dft",
    "interpolation_matrix",
    "evaluate_interpolant",
    "build_fim_direct",
    "build_fim_fast",
    "build_rect_fim",
    "fpsq",
    "check_twin_symmetry",
]

NODE_SNAP = 1e-13


@dataclass(frozen=True)
class PeriodicGrid:
    """Equispaced periodic grid ``x_j = T j / N`` for ``j = 0..N-1``.

    Parameters
    ----------
    T : float
        Period, strictly positive.
    N : int
        Node count, even and at least 2.
    """

    T: float
    N: int

    def __post_init__(self):
        if isinstance(self.N, (bool, np.bool_)) or int(self.N) != self.N:
            raise GridError(f"N must be an integer, got {self.N!r}")
        n = int(self.N)
        if n < 2:
            raise GridError(f"N must be at least 2, got {n}")
        if n % 2:
            raise GridError("N must be even")
        if not np.isfinite(self.T) or self.T <= 0:
            raise GridError(f"T must be positive and finite, got {self.T!r}")
        object.__setattr__(self, "N", n)
        object.__setattr__(self, "T", float(self.T))

    @property
    def nodes(self) -> np.ndarray:
        return self.T * np.arange(self.N) / self.N

    @property
    def spacing(self) -> float:
        return self.T / self.N


def wavenumbers(N: int) -> np.ndarray:
    """Integer wavenumbers ``-N/2, ..., N/2 - 1`` (the primed window)."""
    return np.arange(-(N // 2), N // 2)


def _as_values(values, grid: PeriodicGrid) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.shape[0] != grid.N:
        raise DimensionError(f"expected {grid.N} samples, got shape {v.shape}")
    return v


DIRECT_DFT_MAX = 2048


def _phase_matrix(N: int) -> np.ndarray:
    # exp(-2 pi i k j / N) with the integer product reduced mod N for accuracy
    k = wavenumbers(N)
    j = np.arange(N)
    return np.exp(-2j * np.pi * (np.outer(k, j) % N) / N)


def dft_coefficients(values, grid: PeriodicGrid, *, method: str = "direct") -> np.ndarray:
    """Discrete Fourier coefficients on the primed window.

    Parameters
    ----------
    values : array_like
        Samples at the grid nodes.
    grid : PeriodicGrid
    method : {"direct", "fft"}
        ``direct`` is the O(N^2) summation; ``fft`` uses :func:`numpy.fft.fft`.

    Returns
    -------
    numpy.ndarray
        Complex coefficients ordered as :func:`wavenumbers`.
    """
    v = _as_values(values, grid)
    N = grid.N
    if method == "direct":
        return _phase_matrix(N) @ v / N
    if method == "fft":
        return np.fft.fftshift(np.fft.fft(v)) / N
    raise ValueError(f"unknown method {method!r}")


def inverse_dft(coefficients, grid: PeriodicGrid) -> np.ndarray:
    """Recover real grid values from primed-window coefficients."""
    c = np.asarray(coefficients, dtype=complex)
    if c.shape != (grid.N,):
        raise DimensionError(f"expected {grid.N} coefficients, got shape {c.shape}")
    return (_phase_matrix(grid.N).conj().T @ c).real


@dataclass(frozen=True)
class FourierInterpolant:
    """Trigonometric interpolant of real samples on a :class:`PeriodicGrid`."""

    grid: PeriodicGrid
    values: np.ndarray
    coefficients: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        v = _as_values(self.values, self.grid)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if self.coefficients is None:
            # the direct phase matrix is N x N complex; switch to the FFT for large grids
            method = "direct" if self.grid.N <= DIRECT_DFT_MAX else "fft"
            c = dft_coefficients(v, self.grid, method=method)
            c.setflags(write=False)
            object.__setattr__(self, "coefficients", c)

    @classmethod
    def from_function(cls, f, grid: PeriodicGrid) -> "FourierInterpolant":
        return cls(grid, np.asarray(f(grid.nodes), dtype=float))

    def __call__(self, x):
        return evaluate_interpolant(self, x)


def interpolation_matrix(grid: PeriodicGrid, x) -> np.ndarray:
    """Matrix of Lagrange cardinal functions ``F_j(x_i)``.

    Uses ``F_j(x) = sin(pi N d / T) cot(pi d / T) / N`` with ``d = x - x_j``.
    Points within ``1e-13 T`` of a node (modulo the period) get the unit row.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    T, N = grid.T, grid.N
    d = x[:, None] - grid.nodes[None, :]
    # reduce to (-T/2, T/2] so the node test sees periodic images
    d = d - T * np.round(d / T)
    near = np.abs(d) < NODE_SNAP * T
    arg = np.pi * d / T
    with np.errstate(divide="ignore", invalid="ignore"):
        F = np.sin(N * arg) / np.tan(arg) / N
    rows = near.any(axis=1)
    F[rows] = near[rows].astype(float)
    return F


def evaluate_interpolant(interp: FourierInterpolant, x):
    """Evaluate ``I_N f`` at ``x`` (scalar or array); periodic in ``x``."""
    scalar = np.ndim(x) == 0
    out = interpolation_matrix(interp.grid, x) @ interp.values
    return float(out[0]) if scalar else out


@dataclass(frozen=True)
class FIMatrix:
    """Square Fourier integration matrix and its full-period row."""

    theta: np.ndarray
    grid: PeriodicGrid

    @property
    def period_row(self) -> np.ndarray:
        return np.full(self.grid.N, self.grid.T / self.grid.N)

    @property
    def reduced(self) -> np.ndarray:
        """``theta`` with row 0 deleted."""
        return self.theta[1:]


@dataclass(frozen=True)
class RectFIMatrix:
    theta_hat: np.ndarray
    targets: np.ndarray
    grid: PeriodicGrid


def _nonzero_k(N: int) -> np.ndarray:
    k = wavenumbers(N)
    return k[k != 0]


def build_fim_direct(grid: PeriodicGrid) -> FIMatrix:
    """Reference construction, one entry at a time.

    ``theta[l, j] = (x_l + Re[(iT/2pi) sum_k (1/k) e^{-i w_k x_j}(1 - e^{i w_k x_l})]) / N``
    with ``k`` running over the primed window without zero.
    """
    T, N = grid.T, grid.N
    x = grid.nodes
    K = _nonzero_k(N).astype(float)
    w = 2 * np.pi * K / T
    c2 = 1j * T / (2 * np.pi)
    theta = np.zeros((N, N))
    for l in range(1, N):
        for j in range(N):
            s = np.sum(np.exp(-1j * w * x[j]) * (1 - np.exp(1j * w * x[l])) / K)
            theta[l, j] = (x[l] + (c2 * s).real) / N
    return FIMatrix(theta, grid)


def build_fim_fast(grid: PeriodicGrid) -> FIMatrix:
    """Construction that evaluates about half of each row and mirrors the rest.

    Row ``l`` satisfies ``theta[l, j] = theta[l, l - j]`` for ``j <= l`` and
    ``theta[l, N - j] = theta[l, l + j]`` for ``l < l + j < N``, so only columns
    ``0..floor(l/2)`` and ``l+1..l+floor((N-l)/2)`` are computed.  Mirrored
    entries are copies, so the twin identities hold bitwise.
    """
    T, N = grid.T, grid.N
    x = grid.nodes
    K = _nonzero_k(N).astype(float)
    A = np.exp(1j * (2 * np.pi / T) * np.outer(x, K))
    inv = 1.0 / (K[None, :] * A)  # e^{-i w_k x_j} / k
    B = 1.0 - A
    c2 = 1j * T / (2 * np.pi)
    theta = np.zeros((N, N))
    for l in range(1, N):
        left = np.arange(0, l // 2 + 1)
        right = np.arange(l + 1, l + (N - l) // 2 + 1)
        cols = np.concatenate([left, right])
        vals = (x[l] + (c2 * (inv[cols] @ B[l])).real) / N
        row = theta[l]
        row[cols] = vals
        nl = left.size
        row[l - left] = vals[:nl]
        if right.size:
            jj = right - l
            row[N - jj] = vals[nl:]
    return FIMatrix(theta, grid)


def build_rect_fim(grid: PeriodicGrid, targets) -> RectFIMatrix:
    """Rectangular integration matrix for arbitrary targets in ``(0, T]``."""
    y = np.atleast_1d(np.asarray(targets, dtype=float))
    if y.ndim != 1:
        raise DimensionError("targets must be one-dimensional")
    T, N = grid.T, grid.N
    if np.any(y <= 0) or np.any(y > T) or not np.all(np.isfinite(y)):
        raise DomainError("targets must lie in (0, T]")
    K = _nonzero_k(N).astype(float)
    w = 2 * np.pi * K / T
    Ex = np.exp(-1j * np.outer(w, grid.nodes))  # (k, j)
    By = (1.0 - np.exp(1j * np.outer(y, w))) / K[None, :]  # (l, k)
    c2 = 1j * T / (2 * np.pi)
    theta_hat = (y[:, None] + (c2 * (By @ Ex)).real) / N
    # a target at T integrates the full period: exactly T/N per node
    theta_hat[y == T] = T / N
    return RectFIMatrix(theta_hat, y, grid)


def fpsq(rows, values) -> np.ndarray:
    """Apply integration rows (vector or matrix) to grid samples."""
    R = rows.theta if isinstance(rows, FIMatrix) else rows
    R = R.theta_hat if isinstance(R, RectFIMatrix) else R
    R = np.asarray(R, dtype=float)
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or R.shape[-1] != v.shape[0]:
        raise DimensionError(f"rows with {R.shape[-1]} columns cannot act on {v.shape}")
    return R @ v


def check_twin_symmetry(theta: np.ndarray, *, atol: float = 0.0) -> bool:
    """True when both row-wise twin identities hold to ``atol``."""
    N = theta.shape[0]
    for l in range(1, N):
        j = np.arange(0, (l - 1) // 2 + 1)
        if np.any(np.abs(theta[l, j] - theta[l, l - j]) > atol):
            return False
        j = np.arange(1, (N - l - 1) // 2 + 1)
        if j.size and np.any(np.abs(theta[l, N - j] - theta[l, l + j]) > atol):
            return False
    return True
