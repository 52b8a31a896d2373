"""Gegenbauer polynomials, Gauss rules, barycentric shifted-Gegenbauer quadrature.

Polynomials use the standardization ``G_n(1) = 1``, so ``alpha = 1/2`` gives
Legendre and ``alpha = 0`` gives Chebyshev polynomials of the first kind.  The
weight function is ``w(x) = (1 - x^2)^(alpha - 1/2)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DimensionError, DomainError

__all__ = [
    "DEFAULT_ALPHA",
    "GaussRule",
    "MeshPartition",
    "SGGNodes",
    "SGIMatrix",
    "gegenbauer_eval",
    "gegenbauer_table",
    "gegenbauer_integral_table",
    "gg_nodes_weights",
    "shift_to_partition",
    "barycentric_weights",
    "cardinal_matrix",
    "build_sgim",
    "build_sgim_basis",
    "chain_matrix",
    "piecewise_integrate",
]

DEFAULT_ALPHA = 0.5
DEGENERATE_WIDTH = 1e-12


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not alpha > -0.5:
        raise DomainError(f"alpha must exceed -1/2, got {alpha}")
    return alpha


def gegenbauer_table(alpha: float, n: int, x) -> np.ndarray:
    """Values ``G_0..G_n`` at ``x``; shape ``(n + 1,) + x.shape``."""
    alpha = _check_alpha(alpha)
    x = np.asarray(x, dtype=float)
    G = np.empty((n + 1,) + x.shape)
    G[0] = 1.0
    if n >= 1:
        G[1] = x
    for m in range(1, n):
        G[m + 1] = (2 * (m + alpha) * x * G[m] - m * G[m - 1]) / (m + 2 * alpha)
    return G


def gegenbauer_eval(alpha: float, n: int, x):
    """``G_n^(alpha)(x)`` by the three-term recurrence.

    Examples
    --------
    >>> gegenbauer_eval(0.5, 2, 0.0)
    -0.5
    """
    if n < 0:
        raise DomainError("degree must be non-negative")
    out = gegenbauer_table(alpha, n, x)[n]
    return float(out) if np.ndim(out) == 0 else out


def _gegenbauer_with_derivative(alpha, n, x):
    g0, g1 = np.ones_like(x), x.copy()
    d0, d1 = np.zeros_like(x), np.ones_like(x)
    if n == 0:
        return g0, d0
    for m in range(1, n):
        g2 = (2 * (m + alpha) * x * g1 - m * g0) / (m + 2 * alpha)
        d2 = (2 * (m + alpha) * (g1 + x * d1) - m * d0) / (m + 2 * alpha)
        g0, g1, d0, d1 = g1, g2, d1, d2
    return g1, d1


def gegenbauer_integral_table(alpha: float, n: int, x) -> np.ndarray:
    """Antiderivatives of ``G_0..G_n`` normalized to vanish at ``x = -1``.

    Uses ``int G_m = [(m+2a)/(m+1) G_{m+1} - m/(m+2a-1) G_{m-1}] / (2(m+a))``
    with the ``m = 0`` and (``alpha = 0``, ``m = 1``) cases handled separately.
    """
    alpha = _check_alpha(alpha)
    x = np.asarray(x, dtype=float)

    def antider(z):
        G = gegenbauer_table(alpha, n + 1, z)
        F = np.empty((n + 1,) + z.shape)
        F[0] = z
        for m in range(1, n + 1):
            if m == 1 and alpha == 0.0:
                F[1] = (G[2] + 1.0) / 4.0
                continue
            F[m] = ((m + 2 * alpha) / (m + 1) * G[m + 1]
                    - m / (m + 2 * alpha - 1) * G[m - 1]) / (2 * (m + alpha))
        return F

    lower = antider(np.array(-1.0))
    return antider(x) - lower.reshape((n + 1,) + (1,) * x.ndim)


def _weight_mass(alpha: float) -> float:
    from scipy.special import gammaln

    return float(np.exp(0.5 * np.log(np.pi) + gammaln(alpha + 0.5) - gammaln(alpha + 1.0)))


def _golub_welsch(alpha: float, m: int):
    """Nodes and weights of the ``m``-point Gauss rule for ``w``."""
    k = np.arange(1, m, dtype=float)
    b2 = np.empty(m - 1)
    if m > 1:
        b2[0] = 1.0 / (2 * alpha + 2)
        kk = k[1:]
        b2[1:] = kk * (kk + 2 * alpha - 1) / (4 * (kk + alpha) * (kk + alpha - 1))
    J = np.diag(np.sqrt(b2), 1)
    J = J + J.T
    nodes, vecs = np.linalg.eigh(J)
    weights = _weight_mass(alpha) * vecs[0] ** 2
    return nodes, weights


def _refine_roots(alpha, degree, t):
    for _ in range(4):
        g, d = _gegenbauer_with_derivative(alpha, degree, t)
        step = g / d
        t = t - step
        if np.all(np.abs(step) <= 1e-15):
            break
    return t


@dataclass(frozen=True)
class GaussRule:
    """Gauss rule on ``[-1, 1]`` for the Gegenbauer weight.

    Attributes
    ----------
    alpha : float
    n : int
        The rule has ``n + 1`` nodes (zeros of ``G_{n+1}``).
    nodes, weights : numpy.ndarray
    norms : numpy.ndarray
        ``lambda_j = int G_j^2 w`` for ``j = 0..n``.
    """

    alpha: float
    n: int
    nodes: np.ndarray
    weights: np.ndarray
    norms: np.ndarray


@lru_cache(maxsize=256)
def _cached_rule(alpha: float, n: int) -> GaussRule:
    t, _ = _golub_welsch(alpha, n + 1)
    t = _refine_roots(alpha, n + 1, t)
    # enforce exact symmetry about 0
    t = 0.5 * (t - t[::-1])
    # normalization factors from a larger rule, then weights as reciprocal
    # sums of squared normalized polynomials
    big_t, big_w = _golub_welsch(alpha, n + 11)
    big_t = _refine_roots(alpha, n + 11, big_t)
    norms = (gegenbauer_table(alpha, n, big_t) ** 2) @ big_w
    G = gegenbauer_table(alpha, n, t)
    w = 1.0 / np.sum(G ** 2 / norms[:, None], axis=0)
    w = 0.5 * (w + w[::-1])
    for arr in (t, w, norms):
        arr.setflags(write=False)
    return GaussRule(alpha, n, t, w, norms)


def gg_nodes_weights(alpha: float, n: int) -> GaussRule:
    """Gegenbauer-Gauss rule with ``n + 1`` points on ``[-1, 1]``.

    Exact for ``x^m w(x)`` with ``m <= 2n + 1``.
    """
    alpha = _check_alpha(alpha)
    if n < 0:
        raise DomainError("n must be non-negative")
    return _cached_rule(alpha, int(n))


@dataclass(frozen=True)
class MeshPartition:
    """Breakpoints ``0 = tau_0 < tau_1 < ... < tau_K = T``.

    Partition ``k`` (zero-based) is ``[tau[k], tau[k + 1]]``.
    """

    tau: np.ndarray

    def __post_init__(self):
        tau = np.asarray(self.tau, dtype=float).copy()
        if tau.ndim != 1 or tau.size < 2:
            raise DomainError("a partition needs at least two breakpoints")
        if tau[0] != 0.0:
            raise DomainError("the first breakpoint must be 0")
        widths = np.diff(tau)
        if np.any(widths < DEGENERATE_WIDTH * tau[-1]):
            raise DomainError("partition breakpoints must be strictly increasing "
                              "with non-degenerate widths")
        tau.setflags(write=False)
        object.__setattr__(self, "tau", tau)

    @property
    def K(self) -> int:
        return self.tau.size - 1

    @property
    def T(self) -> float:
        return float(self.tau[-1])

    def plus(self, k: int) -> float:
        return 0.5 * (self.tau[k + 1] + self.tau[k])

    def minus(self, k: int) -> float:
        return 0.5 * (self.tau[k + 1] - self.tau[k])

    def locate(self, t) -> np.ndarray:
        """Index of the partition ``(tau_k, tau_{k+1}]`` containing each point."""
        t = np.asarray(t, dtype=float)
        idx = np.searchsorted(self.tau, t, side="left") - 1
        return np.clip(idx, 0, self.K - 1)


@dataclass(frozen=True)
class SGGNodes:
    """Shifted Gegenbauer-Gauss nodes on one partition."""

    alpha: float
    n: int
    k: int
    lower: float
    upper: float
    ref_nodes: np.ndarray
    nodes: np.ndarray
    christoffel: np.ndarray
    bary_weights: np.ndarray
    norms: np.ndarray

    @property
    def half_length(self) -> float:
        return 0.5 * (self.upper - self.lower)

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.upper + self.lower)


def shift_to_partition(rule: GaussRule, partition: MeshPartition, k: int) -> SGGNodes:
    """Map a reference rule to partition ``k``.

    Nodes go through ``t -> tau_minus t + tau_plus`` and weights and
    normalization factors scale by ``tau_minus^(2 alpha)``.
    """
    if not 0 <= k < partition.K:
        raise DomainError(f"partition index {k} out of range 0..{partition.K - 1}")
    tm, tp = partition.minus(k), partition.plus(k)
    scale = tm ** (2 * rule.alpha)
    nodes = tm * rule.nodes + tp
    chris = scale * rule.weights
    sgg = SGGNodes(
        alpha=rule.alpha, n=rule.n, k=k,
        lower=float(partition.tau[k]), upper=float(partition.tau[k + 1]),
        ref_nodes=rule.nodes, nodes=nodes, christoffel=chris,
        bary_weights=np.empty(0), norms=scale * rule.norms,
    )
    object.__setattr__(sgg, "bary_weights", barycentric_weights(sgg))
    return sgg


def barycentric_weights(sgg: SGGNodes, form: str = "trig") -> np.ndarray:
    """Barycentric weights of the shifted nodes.

    ``form="trig"`` writes the endpoint-distance factor as ``sin(arccos(.))``,
    which avoids cancellation near the interval ends; ``form="algebraic"``
    uses ``sqrt((tau_k - t)(t - tau_{k-1}))`` directly.
    """
    tm, tp = sgg.half_length, sgg.midpoint
    sign = (-1.0) ** np.arange(sgg.n + 1)
    if form == "trig":
        ref = np.clip((sgg.nodes - tp) / tm, -1.0, 1.0)
        return tm ** (-sgg.alpha) * sign * np.sin(np.arccos(ref)) * np.sqrt(sgg.christoffel)
    if form == "algebraic":
        prod = (sgg.upper - sgg.nodes) * (sgg.nodes - sgg.lower) * sgg.christoffel
        return tm ** (-(sgg.alpha + 1)) * sign * np.sqrt(prod)
    raise ValueError(f"unknown form {form!r}")


def cardinal_matrix(nodes, weights, t) -> np.ndarray:
    """Barycentric Lagrange cardinal functions ``L_j(t_i)``.

    Points that coincide with a node get the corresponding unit row.
    """
    nodes = np.asarray(nodes, dtype=float)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    d = t[:, None] - nodes[None, :]
    hit = d == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        q = weights[None, :] / d
        L = q / q.sum(axis=1, keepdims=True)
    rows = hit.any(axis=1)
    L[rows] = hit[rows].astype(float)
    return L


@dataclass(frozen=True)
class SGIMatrix:
    """Shifted Gegenbauer integration matrix for one partition.

    Attributes
    ----------
    p : numpy.ndarray
        Square matrix; row ``i`` integrates from the partition start to node ``i``.
    full_row : numpy.ndarray
        Integrates over the whole partition.
    rect : numpy.ndarray or None
        Rows for user-supplied targets.
    """

    sgg: SGGNodes
    p: np.ndarray
    full_row: np.ndarray
    rect: np.ndarray | None = None
    targets: np.ndarray | None = None


@lru_cache(maxsize=64)
def _legendre_rule(m: int):
    return np.polynomial.legendre.leggauss(m)


def _ref_integrals(ref_nodes, ref_bary, y) -> np.ndarray:
    """``int_{-1}^{y_i} L_j`` on the reference interval by Gauss-Legendre."""
    n = ref_nodes.size - 1
    g, gw = _legendre_rule(2 * n + 8)
    y = np.asarray(y, dtype=float)
    half = 0.5 * (y + 1.0)
    z = half[:, None] * (g[None, :] + 1.0) - 1.0  # (targets, quad)
    L = cardinal_matrix(ref_nodes, ref_bary, z.ravel()).reshape(z.shape + (n + 1,))
    return np.einsum("q,tqj->tj", gw, L) * half[:, None]


def _ref_bary(sgg: SGGNodes) -> np.ndarray:
    w = np.sqrt(sgg.christoffel / sgg.half_length ** (2 * sgg.alpha))
    return (-1.0) ** np.arange(sgg.n + 1) * np.sqrt(1.0 - sgg.ref_nodes ** 2) * w


def _to_reference(sgg: SGGNodes, targets) -> np.ndarray:
    y = np.atleast_1d(np.asarray(targets, dtype=float))
    if y.ndim != 1:
        raise DimensionError("targets must be one-dimensional")
    tol = 1e-14 * max(1.0, abs(sgg.upper))
    if np.any(y <= sgg.lower) or np.any(y > sgg.upper + tol):
        raise DomainError(f"targets must lie in ({sgg.lower}, {sgg.upper}]")
    return np.minimum((y - sgg.midpoint) / sgg.half_length, 1.0)


def build_sgim(sgg: SGGNodes, targets=None) -> SGIMatrix:
    """Integration matrix ``P[i, j] = int_{tau_{k-1}}^{t_i} L_j``.

    Built on the reference interval and scaled by the half-length, so the
    scaling identity holds by construction.  A target equal to the right
    endpoint reproduces ``full_row``.
    """
    ref = sgg.ref_nodes
    bary = _ref_bary(sgg)
    y = np.concatenate([ref, [1.0]])
    P = sgg.half_length * _ref_integrals(ref, bary, y)
    rect = None
    if targets is not None:
        yr = _to_reference(sgg, targets)
        rect = sgg.half_length * _ref_integrals(ref, bary, yr)
        targets = np.atleast_1d(np.asarray(targets, dtype=float))
    return SGIMatrix(sgg, P[:-1], P[-1], rect, targets)


def build_sgim_basis(sgg: SGGNodes, targets=None) -> np.ndarray:
    """Integration matrix through the orthogonal-basis expansion.

    ``P[i, j] = tau_minus sum_m (w_j / lambda_m) G_m(t_j) int_{-1}^{y_i} G_m``
    in reference coordinates.  Rows follow ``targets`` (default: the nodes).
    Used to cross-check :func:`build_sgim`.
    """
    rule = gg_nodes_weights(sgg.alpha, sgg.n)
    y = rule.nodes if targets is None else _to_reference(sgg, targets)
    G = gegenbauer_table(sgg.alpha, sgg.n, rule.nodes)  # (m, j)
    F = gegenbauer_integral_table(sgg.alpha, sgg.n, y)  # (m, i)
    coef = G * (rule.weights[None, :] / rule.norms[:, None])
    return sgg.half_length * (F.T @ coef)


def _partition_rules(partition: MeshPartition, degrees, alpha):
    degrees = list(degrees)
    if len(degrees) != partition.K:
        raise DimensionError(f"need {partition.K} degrees, got {len(degrees)}")
    return [shift_to_partition(gg_nodes_weights(alpha, n), partition, k)
            for k, n in enumerate(degrees)]


def chain_matrix(sgims) -> np.ndarray:
    """Block lower-triangular map from all node samples to ``int_0^{t_i}``.

    Row blocks follow the partitions in order; earlier partitions contribute
    their full-period rows.
    """
    sizes = [s.p.shape[0] for s in sgims]
    offs = np.concatenate([[0], np.cumsum(sizes)])
    C = np.zeros((offs[-1], offs[-1]))
    for m, s in enumerate(sgims):
        rows = slice(offs[m], offs[m + 1])
        for k in range(m):
            C[rows, offs[k]:offs[k + 1]] = sgims[k].full_row
        C[rows, offs[m]:offs[m + 1]] = s.p
    return C


def piecewise_integrate(sampler, partition: MeshPartition, degrees, alpha: float = DEFAULT_ALPHA,
                        targets=None) -> np.ndarray:
    """Cumulative integrals ``int_0^y f`` of a piecewise-smooth integrand.

    Parameters
    ----------
    sampler : callable
        Vectorized ``f(t)``; only called at interior Gauss nodes.
    partition : MeshPartition
        Breakpoints at the discontinuities of ``f``.
    degrees : sequence of int
        ``N_k`` per partition (``N_k + 1`` nodes each).
    alpha : float
    targets : array_like
        Sorted points in ``(0, T]``.
    """
    y = np.atleast_1d(np.asarray(targets, dtype=float))
    if y.ndim != 1:
        raise DimensionError("targets must be one-dimensional")
    if np.any(np.diff(y) < 0):
        raise DomainError("targets must be sorted ascending")
    if np.any(y <= 0) or np.any(y > partition.T):
        raise DomainError(f"targets must lie in (0, {partition.T}]")
    sggs = _partition_rules(partition, degrees, alpha)
    loc = partition.locate(y)
    out = np.empty_like(y)
    acc = 0.0
    for k, sgg in enumerate(sggs):
        f = np.asarray(sampler(sgg.nodes), dtype=float)
        mask = loc == k
        sg = build_sgim(sgg, y[mask] if mask.any() else None)
        if mask.any():
            out[mask] = acc + sg.rect @ f
        acc += sg.full_row @ f
    return out
