"""Shared test helpers: minimal problem builders wired straight from dynamics.

These intentionally bypass the scenarios layer so the solver tests exercise
the bvp contract through an independent construction route.
"""

import numpy as np

from epimfg.bvp import BvpProblem, build_mesh
from epimfg.dynamics import (
    Grid,
    belief_drift_spec,
    mfg_sirsd_value_rhs,
    sirsd_rhs,
    structured_forward_rhs,
    structured_value_rhs,
    waning_drift,
)
from epimfg.horizon import HorizonSchedule
from epimfg.model import ModelParams

MP = ModelParams()


def mfg_problem(params=MP, I0=0.005, schedule=None, n_nodes=601):
    """MFG-SIRSD forward-backward problem; policy is the single rate c_S."""
    if schedule is None:
        schedule = HorizonSchedule.deterministic(300.0)
    mesh, events = build_mesh(schedule, n_nodes)
    c_I = params.cbar_I

    def frhs(y, pol):
        return sirsd_rhs(y, (pol[0], c_I), params.epi)

    def vrhs(v, y, pol=None):
        dv, c = mfg_sirsd_value_rhs(v, y[1], c_I, params, c_S=None if pol is None else pol[0])
        return dv, np.array([c])

    y0 = np.array([1.0 - I0, I0, 0.0, 0.0])
    v_term = np.array([params.penalties.psi_N, params.psi_I, params.penalties.psi_N])
    return BvpProblem(mesh, frhs, vrhs, y0, v_term, np.array([params.cbar_N]), events)


def structured_problem(m, kind="waning", params=MP, I0=0.005, schedule=None, n_nodes=601, alpha=None):
    """Structured problem; returns (problem, band centers)."""
    if schedule is None:
        schedule = HorizonSchedule.deterministic(300.0)
    if alpha is None:
        alpha = params.epi.gamma if kind == "waning" else 0.1
    grid = Grid(m=m, alpha=alpha)
    drift = waning_drift(params.epi) if kind == "waning" else belief_drift_spec(params)
    mesh, events = build_mesh(schedule, n_nodes)

    def frhs(y, pol):
        return structured_forward_rhs(y, pol, drift, grid, params)

    def vrhs(v, y, pol=None):
        return structured_value_rhs(v, y, drift, grid, params, policy=pol)

    y0 = np.zeros(m + 3)
    y0[0] = 1.0 - I0
    y0[m + 1] = I0
    v_term = np.concatenate([np.full(m + 1, params.penalties.psi_N), [params.psi_I]])
    problem = BvpProblem(mesh, frhs, vrhs, y0, v_term, np.full(m + 1, params.cbar_N), events)
    return problem, grid.p
