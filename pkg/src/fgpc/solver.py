"""Fourier-Gegenbauer predictor-corrector for the periodic chemostat problem.

Prediction collocates the integral form of the state equation at the Fourier
nodes and minimizes the mean substrate subject to a mean-dilution constraint.
Correction detects the two switching times of the predicted control, snaps it
to a bang-bang law, and re-solves the state equation at shifted
Gegenbauer-Gauss nodes on the partition cut at the switches.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve
from scipy.optimize import brentq, minimize, root

from .chemostat import ChemostatParams, dpsi_ds, state_derivative_psi
from .edges import EdgeConfig, ReconstructedPiecewise, reconstruct
from .errors import ConvergenceError, DomainError, FgpcError, StageError
from .fourier import FourierInterpolant, PeriodicGrid, build_fim_fast, interpolation_matrix
from .gegenbauer import (
    MeshPartition,
    SGGNodes,
    SGIMatrix,
    build_sgim,
    chain_matrix,
    gg_nodes_weights,
    shift_to_partition,
)

__all__ = [
    "FgpcConfig",
    "PredictorNLP",
    "PredictorResult",
    "CorrectorResult",
    "FgpcSolution",
    "assemble_nlp",
    "project_box_sum",
    "solve_predictor",
    "correct_control",
    "switch_partition",
    "solve_corrector",
    "objective_corrected",
    "run_fgpc",
    "preset_config",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FgpcConfig:
    """Discretization and solver settings for one predictor-corrector run.

    Attributes
    ----------
    N : int
        Fourier collocation nodes (even).
    M : int
        Edge-detection sample count.
    degrees : tuple of int
        Gegenbauer degree per partition (three entries).
    alpha : float
        Gegenbauer index.
    predictor_tol : float
        Stopping threshold on the projected-gradient infinity norm.
    predictor_accept : float
        Projected-gradient level at which the predictor counts as converged.
    """

    N: int = 100
    M: int = 100
    degrees: tuple = (16, 16, 4)
    alpha: float = 0.5
    eps_tilde: float = 0.005
    varepsilon: float | None = None
    predictor_method: str = "spg"
    predictor_tol: float = 1e-8
    predictor_accept: float = 1e-6
    predictor_maxiter: int = 2000
    corrector_tol: float = 1e-12
    corrector_maxiter: int = 50

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2 or self.N % 2:
            raise DomainError("N must be even")
        if len(self.degrees) != 3 or any(int(d) != d or d < 0 for d in self.degrees):
            raise DomainError("degrees must hold three non-negative integers")
        object.__setattr__(self, "degrees", tuple(int(d) for d in self.degrees))
        if self.predictor_method not in ("spg", "slsqp"):
            raise DomainError(f"unknown predictor method {self.predictor_method!r}")

    @property
    def edge_config(self) -> EdgeConfig:
        return EdgeConfig(self.M, self.eps_tilde, self.varepsilon)


def preset_config(name: str, **overrides) -> FgpcConfig:
    """Reference discretization for dataset ``name``, with optional overrides."""
    presets = {
        "D1": dict(N=100, M=100, degrees=(16, 16, 4), alpha=-0.1),
        "D2": dict(N=50, M=200, degrees=(20, 20, 2), alpha=0.5),
    }
    if name not in presets:
        raise DomainError(f"no preset for dataset {name!r}")
    return FgpcConfig(**{**presets[name], **overrides})


# ---------------------------------------------------------------- predictor


class PredictorNLP:
    """Collocated optimal-control problem on the Fourier grid.

    The decision vector is ``X = [s_1..s_{N-1}, u_0..u_{N-1}]``; ``s_0`` is
    pinned to the equilibrium value.  The objective is ``s_bar + sum(s)``
    (``N`` times the discrete mean), subject to
    ``s = s_bar + Theta_r psi(s, u)``, ``sum(u) = N u_bar`` and box bounds.
    """

    def __init__(self, params: ChemostatParams, N: int):
        self.params = params
        self.grid = PeriodicGrid(params.T, N)
        self.N = N
        self.n = N - 1
        self.theta = build_fim_fast(self.grid).reduced
        self.s_bar = params.s_bar
        self.u_bar = params.u_bar_float

    @property
    def size(self) -> int:
        return 2 * self.N - 1

    def split(self, X):
        X = np.asarray(X, dtype=float)
        return np.concatenate([[self.s_bar], X[:self.n]]), X[self.n:]

    def join(self, s, u):
        return np.concatenate([np.asarray(s, float), np.asarray(u, float)])

    def initial_guess(self) -> np.ndarray:
        return self.join(np.full(self.n, self.s_bar), np.full(self.N, self.u_bar))

    def bounds(self):
        p = self.params
        lo = self.join(np.zeros(self.n), np.full(self.N, p.u_min))
        hi = self.join(np.full(self.n, p.s_in), np.full(self.N, p.u_max))
        return lo, hi

    def objective(self, X) -> float:
        return self.s_bar + float(np.sum(np.asarray(X)[:self.n]))

    def objective_gradient(self, X) -> np.ndarray:
        g = np.zeros(self.size)
        g[:self.n] = 1.0
        return g

    def collocation_residual(self, X) -> np.ndarray:
        s, u = self.split(X)
        return s[1:] - self.s_bar - self.theta @ state_derivative_psi(s, u, self.params)

    def state_jacobian(self, s, u) -> np.ndarray:
        """``I - Theta_r diag(dpsi/ds)`` restricted to the free states."""
        d = dpsi_ds(s, u, self.params)
        return np.eye(self.n) - self.theta[:, 1:] * d[None, 1:]

    def collocation_jacobian(self, X) -> np.ndarray:
        s, u = self.split(X)
        J = np.empty((self.n, self.size))
        J[:, :self.n] = self.state_jacobian(s, u)
        J[:, self.n:] = -self.theta * (self.params.s_in - s)[None, :]
        return J

    def mean_residual(self, X) -> float:
        return float(np.sum(np.asarray(X)[self.n:]) - self.N * self.u_bar)

    def mean_row(self) -> np.ndarray:
        a = np.zeros(self.size)
        a[self.n:] = 1.0
        return a

    def solve_state(self, u, s0=None, *, tol=1e-14, maxiter=60):
        """Newton solve of the collocation equations for fixed ``u``.

        Returns the free states and the LU factors of the final Jacobian.
        """
        s = np.full(self.n, self.s_bar) if s0 is None else np.array(s0, dtype=float)
        for it in range(maxiter):
            full = np.concatenate([[self.s_bar], s])
            R = s - self.s_bar - self.theta @ state_derivative_psi(full, u, self.params)
            lu = lu_factor(self.state_jacobian(full, u))
            step = lu_solve(lu, -R)
            s = s + step
            if not np.all(np.isfinite(s)):
                break
            if np.max(np.abs(step)) <= tol * max(1.0, np.max(np.abs(s))):
                full = np.concatenate([[self.s_bar], s])
                return s, lu_factor(self.state_jacobian(full, u))
        raise ConvergenceError("state Newton iteration failed", iterations=it + 1)

    def reduced(self, u, s0=None):
        """Objective and its gradient in ``u`` with the state eliminated.

        Uses the adjoint ``lambda = J_s^{-T} 1`` so that
        ``grad = -lambda^T (dR/du)`` with ``dR/du = -Theta_r diag(s_in - s)``.
        """
        s, lu = self.solve_state(u, s0)
        full = np.concatenate([[self.s_bar], s])
        lam = lu_solve(lu, np.ones(self.n), trans=1)
        grad = (lam @ self.theta) * (self.params.s_in - full)
        return self.s_bar + float(s.sum()), grad, s


def assemble_nlp(params: ChemostatParams, N: int) -> PredictorNLP:
    return PredictorNLP(params, N)


def project_box_sum(v, lo: float, hi: float, total: float) -> np.ndarray:
    """Euclidean projection onto ``{lo <= x <= hi, sum(x) = total}``."""
    v = np.asarray(v, dtype=float)
    n = v.size
    if not n * lo <= total <= n * hi:
        raise DomainError("the affine slice misses the box")

    def excess(theta):
        return float(np.clip(v - theta, lo, hi).sum() - total)

    a, b = float(v.min() - hi), float(v.max() - lo)
    if excess(a) == 0.0:
        return np.clip(v - a, lo, hi)
    if excess(b) == 0.0:
        return np.clip(v - b, lo, hi)
    theta = brentq(excess, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    x = np.clip(v - theta, lo, hi)
    # for large |v| the root is only relatively accurate; excess is linear on the free set
    free = (x > lo) & (x < hi)
    if free.any():
        x[free] = np.clip(x[free] + (total - x.sum()) / free.sum(), lo, hi)
    return x


@dataclass(frozen=True)
class PredictorResult:
    s_p: np.ndarray
    u_p: np.ndarray
    J_p: float
    iterations: int
    converged: bool
    constraint_residual: float
    projected_gradient: float
    grid: PeriodicGrid = field(repr=False)
    s_bar: float = 0.0
    state_in_bounds: bool = True

    @property
    def state_full(self) -> np.ndarray:
        """States at all nodes, starting with the pinned ``s_0``."""
        return np.concatenate([[self.s_bar], self.s_p])


def _spg(nlp: PredictorNLP, u0, tol, maxiter, memory=10, patience=30):
    """Nonmonotone spectral projected gradient on the control.

    Stops on the projected-gradient test, or as a safeguard once the best
    objective has not improved in relative terms by more than 1e-14 for
    ``patience`` iterations.
    """
    p = nlp.params
    total = nlp.N * nlp.u_bar
    u = project_box_sum(u0, p.u_min, p.u_max, total)
    f, g, s = nlp.reduced(u)
    hist = [f]
    best, stale = f, 0
    step = 1.0
    pg = np.inf
    it = 0
    for it in range(1, maxiter + 1):
        pg = float(np.max(np.abs(project_box_sum(u - g, p.u_min, p.u_max, total) - u)))
        if pg <= tol or stale >= patience:
            break
        d = project_box_sum(u - step * g, p.u_min, p.u_max, total) - u
        slope = float(g @ d)
        fref = max(hist[-memory:])
        lam = 1.0
        while True:
            trial = u + lam * d
            try:
                ft, gt, st = nlp.reduced(trial, s)
            except ConvergenceError:
                ft = np.inf
            if ft <= fref + 1e-4 * lam * slope:
                break
            lam *= 0.5
            if lam < 1e-14:
                return u, s, f, it, pg
        du, dg = trial - u, gt - g
        sy = float(du @ dg)
        step = min(max(float(du @ du) / sy, 1e-10), 1e10) if sy > 0 else 1e10
        u, g, f, s = trial, gt, ft, st
        hist.append(f)
        if f < best - 1e-14 * abs(best):
            best, stale = f, 0
        else:
            stale += 1
    return u, s, f, it, pg


def _slsqp(nlp: PredictorNLP, X0, tol, maxiter):
    lo, hi = nlp.bounds()
    cons = [
        {"type": "eq", "fun": nlp.collocation_residual, "jac": nlp.collocation_jacobian},
        {"type": "eq", "fun": nlp.mean_residual, "jac": lambda X: nlp.mean_row()[None, :]},
    ]
    res = minimize(nlp.objective, X0, jac=nlp.objective_gradient, method="SLSQP",
                   bounds=list(zip(lo, hi)), constraints=cons,
                   options={"maxiter": maxiter, "ftol": 1e-15})
    s, u = nlp.split(res.x)
    # re-solve the state exactly for the returned control
    s_free, _ = nlp.solve_state(u, s[1:])
    return u, s_free, res.nit


def solve_predictor(nlp: PredictorNLP, initial_guess=None, *, method: str = "spg",
                    tol: float = 1e-8, accept: float = 1e-6, maxiter: int = 2000) -> PredictorResult:
    """Solve the collocated problem.

    ``spg`` eliminates the state by Newton's method and runs a spectral
    projected gradient on the control, projecting exactly onto the box
    intersected with the mean-dilution hyperplane.  ``slsqp`` solves the full
    problem with SciPy's SLSQP (practical only for small ``N``).
    """
    X0 = nlp.initial_guess() if initial_guess is None else np.asarray(initial_guess, float)
    _, u0 = nlp.split(X0)
    if method == "spg":
        u, s, _, it, _ = _spg(nlp, u0, tol, maxiter)
    elif method == "slsqp":
        u, s, it = _slsqp(nlp, X0, tol, maxiter)
    else:
        raise DomainError(f"unknown predictor method {method!r}")
    p = nlp.params
    f, g, s = nlp.reduced(u, s)
    total = nlp.N * nlp.u_bar
    pg = float(np.max(np.abs(project_box_sum(u - g, p.u_min, p.u_max, total) - u)))
    X = nlp.join(s, u)
    cres = max(float(np.max(np.abs(nlp.collocation_residual(X)))), abs(nlp.mean_residual(X)) / nlp.N)
    # the reduced method leaves the state bounds implicit, so check them here
    full = np.concatenate([[nlp.s_bar], s])
    in_bounds = bool(np.all(full >= -1e-10) and np.all(full <= p.s_in + 1e-10))
    converged = pg <= accept and cres <= 1e-8
    if not in_bounds:
        log.warning("predicted state leaves [0, s_in] by %.3e",
                    max(-full.min(), full.max() - p.s_in))
    if not converged:
        log.warning("predictor stopped with projected gradient %.3e", pg)
    return PredictorResult(s, u, f / nlp.N, it, converged, cres, pg, nlp.grid, nlp.s_bar, in_bounds)


# ---------------------------------------------------------------- corrector


def correct_control(recon: ReconstructedPiecewise, params: ChemostatParams) -> ReconstructedPiecewise:
    """Snap the reconstructed control to the bounds.

    The middle piece ``[xi_1, xi_2)`` goes to whichever bound its level is
    nearer to; the outer pieces take the other bound.
    """
    v = recon(recon.xi[0])
    inner_low = abs(v - params.u_min) < abs(params.u_max - v)
    return ReconstructedPiecewise(recon.xi, float(params.u_max), float(params.u_min),
                                  starts_high=bool(inner_low), T=recon.T)


def switch_partition(xi, T: float, degrees, *, min_width: float = 1e-6):
    """Partition cut at the switching times and the matching degrees.

    A switch closer than ``min_width * T`` to either end of the period
    leaves an empty piece, which is dropped together with its degree.
    """
    cuts, degs = [0.0], []
    bounds = [float(xi[0]), float(xi[1]), float(T)]
    for b, d in zip(bounds, degrees):
        if b - cuts[-1] < min_width * T:
            continue
        cuts.append(b)
        degs.append(d)
    if cuts[-1] != T:
        # the last kept cut stopped short of T: stretch it
        cuts[-1] = float(T)
    return MeshPartition(np.array(cuts)), degs


@dataclass(frozen=True)
class CorrectorResult:
    partition: MeshPartition
    sggs: list = field(repr=False)
    sgims: list = field(repr=False)
    states: list
    control: ReconstructedPiecewise
    J_c: float
    newton_iterations: int
    residual: float
    params: ChemostatParams = field(repr=False)

    @property
    def nodes(self) -> np.ndarray:
        return np.concatenate([g.nodes for g in self.sggs])

    @property
    def state_vector(self) -> np.ndarray:
        return np.concatenate(self.states)

    def psi_samples(self):
        return [state_derivative_psi(s, self.control(g.nodes), self.params)
                for s, g in zip(self.states, self.sggs)]

    def state_at(self, t) -> np.ndarray:
        """Corrected state at arbitrary ``t`` in ``[0, T]`` via the integral form."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.full(t.shape, self.params.s_bar)
        psis = self.psi_samples()
        loc = self.partition.locate(t)
        acc = 0.0
        for k, (sgg, ps) in enumerate(zip(self.sggs, psis)):
            mask = (loc == k) & (t > sgg.lower)
            if mask.any():
                rect = build_sgim(sgg, t[mask]).rect
                out[mask] += acc + rect @ ps
            acc += self.sgims[k].full_row @ ps
        return out

    @property
    def final_state(self) -> float:
        acc = sum(m.full_row @ ps for m, ps in zip(self.sgims, self.psi_samples()))
        return float(self.params.s_bar + acc)


def _corrector_system(params, C, u, s_bar):
    def residual(s):
        return s - s_bar - C @ state_derivative_psi(s, u, params)

    def jacobian(s):
        return np.eye(s.size) - C * dpsi_ds(s, u, params)[None, :]

    return residual, jacobian


def solve_corrector(control: ReconstructedPiecewise, params: ChemostatParams,
                    partition: MeshPartition, degrees, alpha: float,
                    initial_guess=None, *, tol: float = 1e-12, maxiter: int = 50) -> CorrectorResult:
    """Collocate the integral state equation at the Gauss nodes of each piece.

    Damped Newton with an Armijo test on the residual norm; on stagnation
    MINPACK's hybrid (dogleg) method takes over.
    """
    sggs: list[SGGNodes] = [shift_to_partition(gg_nodes_weights(alpha, n), partition, k)
                            for k, n in enumerate(degrees)]
    sgims: list[SGIMatrix] = [build_sgim(g) for g in sggs]
    C = chain_matrix(sgims)
    t = np.concatenate([g.nodes for g in sggs])
    u = control(t)
    s_bar = params.s_bar
    if initial_guess is None:
        s = np.full(t.size, s_bar)
    elif callable(initial_guess):
        s = np.asarray(initial_guess(t), dtype=float)
    else:
        s = np.asarray(initial_guess, dtype=float).copy()
    residual, jacobian = _corrector_system(params, C, u, s_bar)

    R = residual(s)
    rn = float(np.max(np.abs(R)))
    it = 0
    while rn > tol and it < maxiter:
        it += 1
        step = np.linalg.solve(jacobian(s), -R)
        lam, phi0 = 1.0, float(R @ R)
        while True:
            trial = s + lam * step
            Rt = residual(trial)
            if np.all(np.isfinite(Rt)) and float(Rt @ Rt) <= (1 - 1e-4 * lam) * phi0:
                break
            lam *= 0.5
            if lam < 1e-10:
                break
        if lam < 1e-10:
            break
        s, R = trial, Rt
        rn = float(np.max(np.abs(R)))
    if rn > tol:
        sol = root(residual, s, jac=jacobian, method="hybr", options={"xtol": 1e-15})
        it += int(sol.nfev)
        cand = float(np.max(np.abs(residual(sol.x))))
        if cand < rn:
            s, rn = sol.x, cand
    if rn > max(tol, 1e-10):
        raise ConvergenceError(f"corrector residual {rn:.3e} above tolerance",
                               iterations=it, residual=rn)
    offs = np.cumsum([0] + [g.nodes.size for g in sggs])
    states = [s[offs[k]:offs[k + 1]] for k in range(len(sggs))]
    J_c = sum(m.full_row @ sk for m, sk in zip(sgims, states)) / params.T
    return CorrectorResult(partition, sggs, sgims, states, control, float(J_c), it, rn, params)


def objective_corrected(result: CorrectorResult, params: ChemostatParams | None = None) -> float:
    """Time average of the corrected state by per-piece quadrature."""
    T = (params or result.params).T
    return float(sum(m.full_row @ s for m, s in zip(result.sgims, result.states)) / T)


# ---------------------------------------------------------------- pipeline


@dataclass(frozen=True)
class FgpcSolution:
    params: ChemostatParams
    config: FgpcConfig
    predictor: PredictorResult
    reconstruction: ReconstructedPiecewise
    control: ReconstructedPiecewise
    corrector: CorrectorResult
    timings: dict

    @property
    def xi(self):
        return self.control.xi

    @property
    def J_p(self) -> float:
        return self.predictor.J_p

    @property
    def J_c(self) -> float:
        return self.corrector.J_c


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except FgpcError as exc:
        raise StageError(name, str(exc)) from exc


def run_fgpc(params: ChemostatParams, config: FgpcConfig = FgpcConfig()) -> FgpcSolution:
    """Predict, detect switches, snap the control, correct the state."""
    timings = {}
    t0 = time.perf_counter()
    nlp = _stage("predictor", assemble_nlp, params, config.N)
    pred = _stage("predictor", solve_predictor, nlp, method=config.predictor_method,
                  tol=config.predictor_tol, accept=config.predictor_accept,
                  maxiter=config.predictor_maxiter)
    t1 = time.perf_counter()
    timings["predictor"] = t1 - t0

    interp_u = FourierInterpolant(pred.grid, pred.u_p)
    recon = _stage("edges", reconstruct, interp_u, config.edge_config)
    control = correct_control(recon, params)
    t2 = time.perf_counter()
    timings["edges"] = t2 - t1

    partition, degs = _stage("corrector", switch_partition, control.xi, params.T, config.degrees)
    s_full = pred.state_full

    def guess(t):
        return interpolation_matrix(pred.grid, t) @ s_full

    corr = _stage("corrector", solve_corrector, control, params, partition, degs, config.alpha,
                  guess, tol=config.corrector_tol, maxiter=config.corrector_maxiter)
    timings["corrector"] = time.perf_counter() - t2
    return FgpcSolution(params, config, pred, recon, control, corr, timings)
