"""Reduced chemostat model with Contois growth.

On the invariant set ``x = s_in - s`` the substrate obeys ``s' = psi(s, u)``
with ``psi = (u - nu(s)) (s_in - s)``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction
from numbers import Rational

import numpy as np

from .errors import DomainError

__all__ = [
    "ChemostatParams",
    "equilibrium_sbar",
    "equilibrium_ubar",
    "growth_nu",
    "dnu_ds",
    "state_derivative_psi",
    "dpsi_ds",
    "dpsi_du",
    "D1",
    "D2",
    "DATASETS",
]


@dataclass(frozen=True)
class ChemostatParams:
    """Model and operating parameters.

    ``u_bar`` may be a :class:`fractions.Fraction`; it is converted to float
    only where arithmetic needs it.  ``s_bar`` is derived from ``u_bar``.
    """

    s_in: float = 3.0
    mu_max: float = 1.0
    k_s: float = 2.5
    u_min: float = 0.0
    u_max: float = 2.0
    T: float = 10.0
    u_bar: Rational | float = Fraction(58, 63)

    def __post_init__(self):
        if not self.s_in > 0:
            raise DomainError("s_in must be positive")
        if not self.mu_max > 0:
            raise DomainError("mu_max must be positive")
        if not self.k_s > 1:
            raise DomainError("k_s must exceed 1")
        if not 0 <= self.u_min < self.u_max:
            raise DomainError("need 0 <= u_min < u_max")
        if not self.T > 0:
            raise DomainError("T must be positive")
        if not 0 <= self.u_bar < self.mu_max:
            raise DomainError("need 0 <= u_bar < mu_max")
        if not self.u_min <= self.u_bar <= self.u_max:
            raise DomainError("u_bar must lie within the control bounds")

    @property
    def s_bar(self) -> float:
        return float(equilibrium_sbar(self, self.u_bar))

    @property
    def u_bar_float(self) -> float:
        return float(self.u_bar)

    def with_period(self, T: float) -> "ChemostatParams":
        return replace(self, T=T)


def equilibrium_sbar(params: ChemostatParams, u_bar):
    """Equilibrium substrate ``u k s_in / (u (k - 1) + mu)`` for constant dilution ``u``.

    Exact when all inputs are rationals (``Fraction`` or ``int``).
    """
    if not 0 <= u_bar < params.mu_max:
        raise DomainError("need 0 <= u_bar < mu_max")
    k, s_in, mu = params.k_s, params.s_in, params.mu_max
    if isinstance(u_bar, Rational):
        k, s_in, mu = (Fraction(v) for v in (k, s_in, mu))
        return u_bar * k * s_in / (u_bar * (k - 1) + mu)
    return u_bar * k * s_in / (u_bar * (k - 1) + mu)


def equilibrium_ubar(params: ChemostatParams, s_bar: float) -> float:
    """Inverse relation: the dilution rate holding ``s_bar`` at equilibrium."""
    if not 0 <= s_bar < params.s_in:
        raise DomainError("need 0 <= s_bar < s_in")
    return float(growth_nu(s_bar, params))


def growth_nu(s, params: ChemostatParams):
    """Contois rate ``mu s / (k (s_in - s) + s)``."""
    s = np.asarray(s, dtype=float)
    return params.mu_max * s / (params.k_s * (params.s_in - s) + s)


def dnu_ds(s, params: ChemostatParams):
    s = np.asarray(s, dtype=float)
    D = params.k_s * params.s_in + (1 - params.k_s) * s
    return params.mu_max * params.k_s * params.s_in / D ** 2


def state_derivative_psi(s, u, params: ChemostatParams):
    """``psi(s, u) = (u - nu(s)) (s_in - s)``."""
    s = np.asarray(s, dtype=float)
    return (u - growth_nu(s, params)) * (params.s_in - s)


def dpsi_ds(s, u, params: ChemostatParams):
    s = np.asarray(s, dtype=float)
    return -dnu_ds(s, params) * (params.s_in - s) - (u - growth_nu(s, params))


def dpsi_du(s, params: ChemostatParams):
    return params.s_in - np.asarray(s, dtype=float)


D1 = ChemostatParams(u_bar=Fraction(58, 63))
D2 = ChemostatParams(u_bar=Fraction(36754, 94869))
DATASETS = {"D1": D1, "D2": D2}
