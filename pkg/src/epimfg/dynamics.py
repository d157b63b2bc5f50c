"""Right-hand sides for the forward population and backward value systems.

Four model variants share these assemblies:

- SIRSD: four scalar compartments (S, I, R, D).
- MFG-SIRSD: SIRSD forward dynamics coupled to value ODEs (V_S, V_I, V_R)
  with the Nash contact rate substituted.
- Structured waning / belief models: the noninfected population carries an
  immunity coordinate p in [0, 1], discretized into m+1 bands at centers
  p_j = j/m. The forward system is a finite-volume advection scheme with
  upwind flux-vector splitting; the backward system is a Lax-Friedrichs
  semi-discretization of the Hamilton-Jacobi equation.

State layouts: structured forward (N_0..N_m, I, D), structured backward
(V_0..V_m, V_I). Scalar forward (S, I, R, D), scalar backward (V_S, V_I, V_R).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .model import EpiParams, ModelParams, best_response_array, utility

__all__ = [
    "ConfigurationError",
    "Grid",
    "DriftSpec",
    "waning_drift",
    "belief_drift_spec",
    "belief_drift",
    "sirsd_rhs",
    "mfg_sirsd_value_rhs",
    "interface_flux",
    "structured_forward_rhs",
    "structured_value_rhs",
]


class ConfigurationError(ValueError):
    """A numerical-scheme parameter violates its stability requirement."""


@dataclass(frozen=True)
class Grid:
    """Immunity-axis discretization: m+1 bands centered at p_j = j/m.

    Edge bands have width h/2, interior bands width h = 1/m. alpha is the
    Lax-Friedrichs diffusion coefficient of the value scheme and must
    dominate the realized advection speed |f|.
    """

    m: int
    alpha: float
    p: np.ndarray = field(init=False, repr=False)
    widths: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.m < 1 or self.m != int(self.m):
            raise ValueError(f"band count m must be an integer >= 1, got {self.m}")
        if self.alpha <= 0.0:
            raise ValueError("alpha must be positive")
        h = 1.0 / self.m
        p = np.arange(self.m + 1) * h
        widths = np.full(self.m + 1, h)
        widths[0] = widths[-1] = h / 2.0
        p.setflags(write=False)
        widths.setflags(write=False)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "widths", widths)

    @property
    def h(self) -> float:
        return 1.0 / self.m


@dataclass(frozen=True)
class DriftSpec:
    """Immunity drift f(p, c, I) and its contact derivative df/dc(p, I).

    kind is "waning" (observable decay, c-independent) or "belief"
    (posterior probability of intact immunity, increasing in contacts
    through survival evidence).
    """

    kind: str
    f: Callable[[np.ndarray, np.ndarray, float], np.ndarray]
    df_dc: Callable[[np.ndarray, float], np.ndarray]


def waning_drift(params: EpiParams) -> DriftSpec:
    """Observable waning immunity: p decays exponentially, f = -gamma p."""
    gamma = params.gamma

    def f(p, c, I):
        return -gamma * np.asarray(p, dtype=float)

    def df_dc(p, I):
        return np.zeros_like(np.asarray(p, dtype=float))

    return DriftSpec("waning", f, df_dc)


def belief_drift(p, c, I, params: ModelParams):
    """Belief drift -gamma p + beta cbar_I I c p (1 - p).

    The decay term is the prior rate of losing immunity; the positive term
    is the evidence gained by socializing without getting reinfected.
    Fixed points for constant (c, I): p = 0 and p = 1 - gamma/(beta cbar_I I c).
    """
    p = np.asarray(p, dtype=float)
    out = -params.epi.gamma * p + params.epi.beta * params.cbar_I * I * c * p * (1.0 - p)
    return out if out.ndim else float(out)


def belief_drift_spec(params: ModelParams) -> DriftSpec:
    """Unobserved disappearing immunity tracked through a Bayesian belief."""
    gamma = params.epi.gamma
    rate = params.epi.beta * params.cbar_I

    def f(p, c, I):
        p = np.asarray(p, dtype=float)
        return -gamma * p + rate * I * c * p * (1.0 - p)

    def df_dc(p, I):
        p = np.asarray(p, dtype=float)
        return rate * I * p * (1.0 - p)

    return DriftSpec("belief", f, df_dc)


def sirsd_rhs(state, contacts, params: EpiParams) -> np.ndarray:
    """Compartmental derivatives for (S, I, R, D).

    contacts is the pair (c_S, c_I). Every flow appears once with both
    signs, so the components sum to zero exactly.
    """
    S, I, R, D = state
    c_S, c_I = contacts
    infect = params.beta * c_I * c_S * I * S
    recover = params.mu * I
    wane = params.gamma * R
    die = params.delta * I
    return np.array([-infect + wane, infect - recover - die, recover - wane, die])


def mfg_sirsd_value_rhs(vals, I: float, c_I: float, params: ModelParams, c_S: float | None = None):
    """Value derivatives (dV_S, dV_I, dV_R) and the Nash contact rate c_S*.

    The susceptible agent maximizes u_N(c) + beta c_I I c (V_I - V_S); the
    resulting c* feeds the Hamilton-Jacobi ODEs. Infected and recovered
    agents have no contact tradeoff (their myopic rates are constants), so
    their equations are linear. Passing c_S freezes the susceptible contact
    rate instead of optimizing (used to price a fixed policy).
    """
    V_S, V_I, V_R = vals
    epi, pen = params.epi, params.penalties
    if c_S is None:
        kappa = epi.beta * c_I * I * (V_I - V_S)
        c_star = float(best_response_array(kappa, params.util))
    else:
        c_star = float(c_S)
    dV_S = -utility("N", c_star, params.util) + epi.beta * c_I * c_star * I * (V_S - V_I)
    dV_I = -params.ubar_I + epi.mu * (V_I - V_R) + epi.delta * (V_I - pen.psi_D)
    dV_R = -params.ubar_N + epi.gamma * (V_R - V_S)
    return np.array([dV_S, dV_I, dV_R]), c_star


def interface_flux(f_left, f_right, n_left, n_right):
    """Upwind flux-vector-splitting interface flux f_left+ N_left + f_right- N_right.

    Positive drift transports mass from the left cell, negative drift from
    the right cell. Domain-boundary callers pass N = 0 for the ghost cell.
    """
    return np.maximum(f_left, 0.0) * n_left + np.minimum(f_right, 0.0) * n_right


def structured_forward_rhs(state, policy, drift: DriftSpec, grid: Grid, params: ModelParams) -> np.ndarray:
    """Band-mass derivatives (dN_0..dN_m, dI, dD) under the given policy.

    Advection along p uses the interface fluxes divided by the uniform
    band width h (also at the half-width edge bands). Infection removes
    mass from band j at rate beta cbar_I I c_j (1 - p_j); recovery feeds
    band m (full immunity); deaths accumulate in D.
    """
    m = grid.m
    N = np.asarray(state[: m + 1], dtype=float)
    I = float(state[m + 1])
    policy = np.asarray(policy, dtype=float)
    f = drift.f(grid.p, policy, I)

    flux = np.empty(m + 2)  # flux[j] is the interface below band j
    flux[1:-1] = interface_flux(f[:-1], f[1:], N[:-1], N[1:])
    flux[0] = interface_flux(f[0], f[0], 0.0, N[0])
    flux[-1] = interface_flux(f[m], f[m], N[m], 0.0)

    infect = params.epi.beta * params.cbar_I * I * policy * (1.0 - grid.p) * N
    out = np.empty(m + 3)
    out[: m + 1] = -(flux[1:] - flux[:-1]) / grid.h - infect
    out[m] += params.epi.mu * I
    out[m + 1] = infect.sum() - (params.epi.mu + params.epi.delta) * I
    out[m + 2] = params.epi.delta * I
    return out


def structured_value_rhs(vals, state, drift: DriftSpec, grid: Grid, params: ModelParams, policy=None):
    """Value derivatives (dV_0..dV_m, dV_I) and the per-band Nash policy.

    Central differences for the drift transport term use linear-extrapolation
    ghost values V_-1 = 2V_0 - V_1 and V_m+1 = 2V_m - V_m-1, which makes the
    edge derivatives one-sided and kills the Lax-Friedrichs term at the
    edges. Raises ConfigurationError when the realized drift speed exceeds
    alpha, the stability bound of the Lax-Friedrichs term. Passing a policy
    freezes the per-band contact rates instead of optimizing.
    """
    m = grid.m
    V = np.asarray(vals[: m + 1], dtype=float)
    V_I = float(vals[m + 1])
    I = float(state[m + 1])
    epi, pen = params.epi, params.penalties
    h = grid.h

    ghost_lo = 2.0 * V[0] - V[1]
    ghost_hi = 2.0 * V[m] - V[m - 1]
    Vg = np.concatenate([[ghost_lo], V, [ghost_hi]])
    dVdp = (Vg[2:] - Vg[:-2]) / (2.0 * h)
    lap = (Vg[2:] - 2.0 * V + Vg[:-2]) / (2.0 * h)

    infection_rate = epi.beta * params.cbar_I * I * (1.0 - grid.p)
    if policy is None:
        kappa = infection_rate * (V_I - V)
        lam = drift.df_dc(grid.p, I) * dVdp
        c_star = best_response_array(kappa + lam, params.util)
    else:
        c_star = np.asarray(policy, dtype=float)

    f = drift.f(grid.p, c_star, I)
    speed = float(np.max(np.abs(f)))
    if speed > grid.alpha * (1.0 + 1e-12) + 1e-15:
        raise ConfigurationError(
            f"Lax-Friedrichs alpha={grid.alpha} is below the realized drift speed {speed}"
        )

    u = (params.util.b_N * c_star - c_star * c_star) ** params.util.g - params.util.a_N
    out = np.empty(m + 2)
    out[: m + 1] = -u + infection_rate * c_star * (V - V_I) - f * dVdp - grid.alpha * lap
    out[m + 1] = -params.ubar_I + epi.mu * (V_I - V[m]) + epi.delta * (V_I - pen.psi_D)
    return out, c_star
