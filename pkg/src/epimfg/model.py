"""Model constants, utility functions, and the scalar Nash best response.

Health statuses are the strings "N" (noninfected) and "I" (infected).
Noninfected agents choose a daily contact rate c and receive utility
u_z(c) = (b_z c - c^2)^g - a_z, strictly concave on [0, b_z] with
unconstrained maximum at b_z / 2.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "UtilityParams",
    "EpiParams",
    "Penalties",
    "ModelParams",
    "utility",
    "myopic_contact",
    "myopic_utility",
    "terminal_penalty_infected",
    "best_response",
    "best_response_array",
]


@dataclass(frozen=True)
class UtilityParams:
    """Parameters of the concave contact utility u_z(c) = (b_z c - c^2)^g - a_z."""

    g: float = 0.25
    b_N: float = 10.0
    b_I: float = 6.0
    a_N: float = 0.0
    a_I: float = 4.0

    def __post_init__(self):
        if not 0.0 < self.g <= 1.0:
            raise ValueError(f"exponent g must be in (0, 1], got {self.g}")
        if self.b_N <= 0.0 or self.b_I <= 0.0:
            raise ValueError("linear coefficients b_N, b_I must be positive")

    def b(self, z: str) -> float:
        return self.b_N if z == "N" else self.b_I

    def a(self, z: str) -> float:
        return self.a_N if z == "N" else self.a_I


@dataclass(frozen=True)
class EpiParams:
    """Epidemiological rates: transmission, recovery, immunity loss, death."""

    beta: float = 0.05
    mu: float = 0.1
    gamma: float = 1.0 / 90.0
    delta: float = 1e-3

    def __post_init__(self):
        for name in ("beta", "mu", "gamma", "delta"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be strictly positive")
        # mu + delta > 0 is implied but keep the intent explicit
        if self.mu + self.delta <= 0.0:
            raise ValueError("mu + delta must be positive")


def _check_status(z: str) -> None:
    if z not in ("N", "I"):
        raise ValueError(f"health status must be 'N' or 'I', got {z!r}")


def utility(z: str, c, params: UtilityParams):
    """Instantaneous utility of contact rate c in health status z.

    Accepts scalars or arrays for c. Raises on c outside [0, b_z].
    """
    _check_status(z)
    b, a = params.b(z), params.a(z)
    c = np.asarray(c, dtype=float)
    if np.any(c < 0.0) or np.any(c > b):
        raise ValueError(f"contact rate outside [0, {b}] for status {z}")
    out = (b * c - c * c) ** params.g - a
    return out if out.ndim else float(out)


def myopic_contact(z: str, params: UtilityParams) -> float:
    """Unconstrained maximizer b_z / 2 of the instantaneous utility."""
    _check_status(z)
    return params.b(z) / 2.0


def myopic_utility(z: str, params: UtilityParams) -> float:
    """Utility at the myopic contact rate, u_z(b_z / 2)."""
    return float(utility(z, myopic_contact(z, params), params))


def terminal_penalty_infected(params: EpiParams, uparams: UtilityParams, psi_D: float) -> float:
    """Terminal value of being infected at the horizon.

    An agent infected at the horizon finishes the disease course after it:
    recovery at rate mu ends the handicap, death at rate delta costs psi_D.
    The expected post-horizon loss is
    (u_bar_I - u_bar_N) / (mu + delta) + psi_D * delta / (mu + delta).
    """
    ubar_I = myopic_utility("I", uparams)
    ubar_N = myopic_utility("N", uparams)
    rate = params.mu + params.delta
    return (ubar_I - ubar_N) / rate + psi_D * params.delta / rate


@dataclass(frozen=True)
class Penalties:
    """Terminal values: death penalty psi_D and noninfected reward psi_N.

    The infected terminal penalty depends on the other parameter groups and
    is recomputed on demand so it can never go stale.
    """

    psi_D: float = -1000.0
    psi_N: float = 0.0

    def psi_I(self, epi: EpiParams, util: UtilityParams) -> float:
        return terminal_penalty_infected(epi, util, self.psi_D)


@dataclass(frozen=True)
class ModelParams:
    """Bundle of all model constants shared by the dynamics assemblies."""

    epi: EpiParams = EpiParams()
    util: UtilityParams = UtilityParams()
    penalties: Penalties = Penalties()

    @property
    def cbar_N(self) -> float:
        return myopic_contact("N", self.util)

    @property
    def cbar_I(self) -> float:
        return myopic_contact("I", self.util)

    @property
    def ubar_N(self) -> float:
        return myopic_utility("N", self.util)

    @property
    def ubar_I(self) -> float:
        return myopic_utility("I", self.util)

    @property
    def psi_I(self) -> float:
        return self.penalties.psi_I(self.epi, self.util)


def _foc(c, L: float, g: float, b: float):
    """First-order condition g (b - 2c) (b c - c^2)^(g-1) + L, decreasing in c.

    Array callers must keep c strictly inside (0, b); the scalar solver uses
    _foc_scalar which handles the endpoint limits.
    """
    q = b * c - c * c
    return g * (b - 2.0 * c) * q ** (g - 1.0) + L


def _foc_scalar(c: float, L: float, g: float, b: float) -> float:
    q = b * c - c * c
    if q <= 0.0:  # marginal utility diverges at the endpoints
        return np.inf if c < 0.5 * b else -np.inf
    return g * (b - 2.0 * c) * q ** (g - 1.0) + L


def _foc_deriv(c, g: float, b: float):
    q = b * c - c * c
    return g * (-2.0 * q ** (g - 1.0) + (g - 1.0) * (b - 2.0 * c) ** 2 * q ** (g - 2.0))


_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def best_response(kappa: float, lambda_drift: float, params: UtilityParams, tol: float = 1e-9) -> float:
    """Maximizer of c -> u_N(c) + (kappa + lambda_drift) * c on [0, b_N].

    kappa is the marginal infection cost per contact, lambda_drift the
    marginal drift reward per contact (zero when the immunity drift does not
    depend on c). The objective is strictly concave, so the maximizer is
    unique; the marginal utility diverges at both endpoints, so it is always
    interior. Golden-section search brackets the optimum, then safeguarded
    Newton on the first-order condition polishes to absolute tolerance tol.
    """
    L = kappa + lambda_drift
    g, b = params.g, params.b_N

    def obj(c):
        return (b * c - c * c) ** g + L * c

    # golden-section bracket on the open interval; endpoints are excluded
    # because the utility's derivative is singular there
    lo, hi = 0.0, b
    c1 = hi - _GOLDEN * (hi - lo)
    c2 = lo + _GOLDEN * (hi - lo)
    f1, f2 = obj(c1), obj(c2)
    while hi - lo > 1e-3:
        if f1 < f2:
            lo, c1, f1 = c1, c2, f2
            c2 = lo + _GOLDEN * (hi - lo)
            f2 = obj(c2)
        else:
            hi, c2, f2 = c2, c1, f1
            c1 = hi - _GOLDEN * (hi - lo)
            f1 = obj(c1)

    # safeguarded Newton on the FOC: keep a sign-changing bracket, bisect
    # whenever the Newton step leaves it
    a_, b_ = lo, hi
    while _foc_scalar(a_, L, g, b) <= 0.0:  # widen left edge if bracket decayed
        a_ *= 0.5
    while _foc_scalar(b_, L, g, b) >= 0.0:
        b_ = 0.5 * (b_ + b)
    c = 0.5 * (a_ + b_)
    for _ in range(200):
        F = _foc_scalar(c, L, g, b)
        if F > 0.0:
            a_ = c
        else:
            b_ = c
        c_new = c - F / _foc_deriv(c, g, b)
        if not a_ < c_new < b_:
            c_new = 0.5 * (a_ + b_)
        if abs(c_new - c) < tol and b_ - a_ < 4.0 * tol:
            c = c_new
            break
        c = c_new
    assert _foc_deriv(c, g, b) < 0.0  # strict concavity at the optimum
    return float(c)


@lru_cache(maxsize=8)
def _response_table(g: float, b: float):
    # Lambda(c) = -g (b - 2c) (b c - c^2)^(g-1) is strictly increasing, so a
    # tanh-spaced table (dense near the singular endpoints) inverts it
    s = np.tanh(np.linspace(-12.0, 12.0, 4001))
    c = np.clip(b * 0.5 * (1.0 + s), 1e-12, b - 1e-12)
    return -_foc(c, 0.0, g, b), c


def best_response_array(L, params: UtilityParams):
    """Vectorized best response as a function of L = kappa + lambda_drift.

    Table lookup on the inverse first-order condition followed by Newton
    polish; agrees with the scalar route to the same tolerance.
    """
    Ltab, ctab = _response_table(params.g, params.b_N)
    g, b = params.g, params.b_N
    c = np.interp(L, Ltab, ctab)
    for _ in range(3):
        F = _foc(c, L, g, b)
        c = np.clip(c - F / _foc_deriv(c, g, b), 1e-12, b - 1e-12)
    return c
