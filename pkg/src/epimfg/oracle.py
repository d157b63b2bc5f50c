"""Independent brute-force validators for the belief dynamics and value ODEs.

simulate_belief_cohort runs an agent-level Monte Carlo of the
recovered-agent experiment: immunity is lost at an unobserved exponential
time, after which infection arrives with the time-varying hazard
beta * cbar_I * c(t) * I(t). The empirical fraction still immune among
agents not yet reinfected estimates the posterior belief and must follow
the belief ODE. bellman_reference performs one explicit discrete backup of
the value recursion, giving a finite-difference check of the
Hamilton-Jacobi right-hand sides.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import belief_drift
from .model import ModelParams, best_response_array, utility

__all__ = [
    "AgentPath",
    "BeliefCohort",
    "simulate_belief_cohort",
    "bellman_reference",
    "policy_interpolator",
    "belief_ode_path",
]

_MAX_THINNING_ROUNDS = 100_000


@dataclass(frozen=True)
class AgentPath:
    """One agent's experiment: recovery, hidden immunity loss, reinfection."""

    t_R: float
    immunity_loss_time: float
    infection_time: float  # inf when never reinfected

    def status(self, t: float) -> str:
        if t < self.t_R:
            raise ValueError("agent path starts at its recovery time")
        if t >= self.infection_time:
            return "I"
        if t >= self.immunity_loss_time:
            return "S"
        return "R"


@dataclass(frozen=True)
class BeliefCohort:
    """Monte-Carlo estimate of the immunity belief with binomial errors.

    p_hat[k] is the fraction of agents with immunity intact at times[k]
    among those not yet reinfected; n_at_risk[k] is that denominator.
    degenerate marks times where every agent was already reinfected.
    """

    times: np.ndarray
    p_hat: np.ndarray
    se: np.ndarray
    n_at_risk: np.ndarray
    immunity_loss_times: np.ndarray
    infection_times: np.ndarray
    t_R: float

    @property
    def degenerate(self) -> np.ndarray:
        return self.n_at_risk == 0

    def agent_path(self, i: int) -> AgentPath:
        return AgentPath(self.t_R, float(self.immunity_loss_times[i]), float(self.infection_times[i]))


def simulate_belief_cohort(
    n_agents: int,
    c,
    I,
    t_R: float,
    horizon: float,
    seed: int,
    params: ModelParams | None = None,
    times=None,
    n_times: int = 50,
) -> BeliefCohort:
    """Simulate recovered agents and estimate the immunity belief path.

    c and I are callables of time (contact policy and infected fraction).
    Immunity-loss clocks are exact exponential samples at rate gamma;
    reinfection times are sampled by thinning against the constant majorant
    beta * cbar_I * b_N * max(I), which is exact for time-varying hazards.
    """
    if n_agents < 10_000:
        raise ValueError("n_agents must be at least 10^4 for usable error bars")
    if horizon <= t_R:
        raise ValueError("horizon must exceed the recovery time")
    params = params or ModelParams()
    rng = np.random.default_rng(np.random.Philox(seed))

    loss_times = t_R + rng.exponential(1.0 / params.epi.gamma, n_agents)

    grid = np.linspace(t_R, horizon, 4001)
    rate_scale = params.epi.beta * params.cbar_I
    majorant = rate_scale * params.util.b_N * float(np.max(I(grid)))
    infection_times = np.full(n_agents, np.inf)
    if majorant > 0.0:
        t_cur = np.full(n_agents, t_R)
        active = np.arange(n_agents)
        for _ in range(_MAX_THINNING_ROUNDS):
            t_cand = t_cur[active] + rng.exponential(1.0 / majorant, active.size)
            alive = t_cand < horizon
            active = active[alive]
            t_cand = t_cand[alive]
            if active.size == 0:
                break
            hazard = rate_scale * np.asarray(c(t_cand)) * np.asarray(I(t_cand))
            ratio = hazard / majorant
            if np.any(ratio > 1.0 + 1e-9):
                raise RuntimeError("thinning majorant violated; contact rate exceeds b_N?")
            accept = (rng.random(active.size) < ratio) & (t_cand > loss_times[active])
            infection_times[active[accept]] = t_cand[accept]
            t_cur[active] = t_cand
            active = active[~accept]
            if active.size == 0:
                break
        else:
            raise RuntimeError("thinning did not terminate")

    if times is None:
        times = np.linspace(t_R, horizon, n_times + 1)[1:]
    times = np.asarray(times, dtype=float)
    p_hat = np.empty(times.size)
    se = np.empty(times.size)
    n_at_risk = np.empty(times.size, dtype=int)
    for k, t in enumerate(times):
        at_risk = infection_times > t
        n_k = int(at_risk.sum())
        n_at_risk[k] = n_k
        if n_k == 0:
            p_hat[k] = np.nan
            se[k] = np.nan
            continue
        p = float((loss_times > t).sum()) / n_k  # immune agents are all at risk
        p_hat[k] = p
        se[k] = np.sqrt(max(p * (1.0 - p), 0.0) / n_k)
    return BeliefCohort(times, p_hat, se, n_at_risk, loss_times, infection_times, t_R)


def bellman_reference(tau: float, vals, I: float, c_I: float, params: ModelParams) -> np.ndarray:
    """One explicit discrete backup of the value recursion over a step tau.

    Given values (V_S, V_I, V_R) at t + tau, returns the backup at t:
    the susceptible agent optimizes contacts against the infection
    probability beta c c_I I tau; infected agents recover with probability
    mu tau, die with probability delta tau; recovered agents lose immunity
    with probability gamma tau. Used to finite-difference-check the value
    right-hand sides to first order in tau.
    """
    if tau > 1e-4:
        raise ValueError("tau must be at most 1e-4 for the first-order backup")
    V_S, V_I, V_R = (float(x) for x in vals)
    epi = params.epi
    kappa = epi.beta * c_I * I * (V_I - V_S)
    c = float(best_response_array(kappa, params.util))
    u_c = float(utility("N", c, params.util))
    p_inf = epi.beta * c * c_I * I * tau
    backup_S = tau * u_c + p_inf * V_I + (1.0 - p_inf) * V_S
    backup_I = tau * params.ubar_I + epi.mu * tau * V_R + epi.delta * tau * params.penalties.psi_D \
        + (1.0 - epi.mu * tau - epi.delta * tau) * V_I
    backup_R = tau * params.ubar_N + epi.gamma * tau * V_S + (1.0 - epi.gamma * tau) * V_R
    return np.array([backup_S, backup_I, backup_R])


def policy_interpolator(t_nodes, p_centers, policy):
    """Bilinear interpolant c*(p, t) over an equilibrium policy table.

    At duplicated time nodes (horizon events) the right-hand segment is
    used, matching forward-in-time continuation.
    """
    t_nodes = np.asarray(t_nodes, dtype=float)
    p_centers = np.asarray(p_centers, dtype=float)
    P = np.asarray(policy, dtype=float)
    if P.shape != (t_nodes.size, p_centers.size):
        raise ValueError("policy table must be (n_times, n_bands)")

    def c_star(p: float, t: float) -> float:
        i = int(np.clip(np.searchsorted(t_nodes, t, side="right") - 1, 0, t_nodes.size - 2))
        dt = t_nodes[i + 1] - t_nodes[i]
        w = 0.0 if dt == 0.0 else min(max((t - t_nodes[i]) / dt, 0.0), 1.0)
        row = (1.0 - w) * P[i] + w * P[i + 1]
        if p_centers.size == 1:
            return float(row[0])
        return float(np.interp(p, p_centers, row))

    return c_star


def belief_ode_path(t_nodes, I_nodes, p_centers, policy, t_R, params: ModelParams, n_steps=4000):
    """Posterior-belief trajectory of an agent who recovered at t_R.

    Integrates dp/dt = belief drift evaluated at c = c*(p, t) and the solved
    infection curve I(t), starting from full immunity confidence p(t_R) = 1,
    with fixed-step RK4. Returns (times, beliefs, contacts) where contacts
    is the equilibrium contact rate realized along the path, i.e. the
    deterministic policy a recovered agent actually plays. This is the
    model-side curve that the Monte Carlo cohort estimator must match.
    """
    t_nodes = np.asarray(t_nodes, dtype=float)
    I_nodes = np.asarray(I_nodes, dtype=float)
    T = float(t_nodes[-1])
    if not t_nodes[0] <= t_R < T:
        raise ValueError(f"t_R must lie inside the solved window, got {t_R}")
    c_star = policy_interpolator(t_nodes, p_centers, policy)

    def rhs(t, p):
        p = min(max(p, 0.0), 1.0)
        I_t = float(np.interp(t, t_nodes, I_nodes))
        return belief_drift(p, c_star(p, t), I_t, params)

    ts = np.linspace(t_R, T, n_steps + 1)
    ps = np.empty_like(ts)
    cs = np.empty_like(ts)
    p = 1.0
    for k, t in enumerate(ts):
        ps[k] = p
        cs[k] = c_star(p, t)
        if k == ts.size - 1:
            break
        h = ts[k + 1] - t
        k1 = rhs(t, p)
        k2 = rhs(t + 0.5 * h, p + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, p + 0.5 * h * k2)
        k4 = rhs(t + h, p + h * k3)
        p = min(max(p + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4), 0.0), 1.0)
    return ts, ps, cs
