"""Forward-backward two-point boundary value solver for Nash equilibria.

The coupled system pairs a forward population model (initial conditions at
t = 0) with backward value equations (terminal conditions at t = T_n) and
optional interior value jumps at candidate terminal times. The solver is a
damped fixed-point sweep: integrate the population forward under the current
policy, integrate the values backward along that trajectory while reading
off the pointwise best response, then relax the policy toward the best
response. Each converged solve carries a certificate that the returned
triple (trajectory, values, policy) reproduces itself under re-integration.

Integration is classical fixed-step fourth-order Runge-Kutta on the problem
mesh; node quantities are interpolated linearly inside steps. Meshes contain
every interior event time twice: the first node of the pair carries the
left limit of the values (after the jump condition), the second the right
limit. Forward states are equal on both nodes.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .horizon import HorizonSchedule, apply_value_jump, conditional_probs

__all__ = [
    "BvpProblem",
    "SolveReport",
    "EquilibriumSolution",
    "NonConvergence",
    "MeshExhausted",
    "build_mesh",
    "initial_guess",
    "solve",
    "continuation_in_m",
]


class NonConvergence(RuntimeError):
    """Fixed-point sweep failed to reach tolerance; carries the last report."""

    def __init__(self, message: str, report: "SolveReport"):
        super().__init__(message)
        self.report = report


class MeshExhausted(RuntimeError):
    """Mesh refinement hit its cap without reaching tolerance."""

    def __init__(self, message: str, report: "SolveReport"):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class SolveReport:
    converged: bool
    residual_norm: float
    iterations: int
    mesh_size: int
    wall_time: float
    omega_final: float = float("nan")
    certificate_residual: float = float("nan")


@dataclass(frozen=True)
class BvpProblem:
    """Forward-backward problem on a fixed time mesh.

    forward_rhs(y, policy) returns dy/dt; value_rhs(v, y, policy=None)
    returns (dv/dt, best-response policy), substituting the forced policy
    when one is given. events list (node_index, theta_tilde) pairs where
    node_index is the first of two identical mesh times; the value jump
    blends toward v_terminal there. myopic_policy seeds the iteration.
    """

    mesh: np.ndarray
    forward_rhs: Callable[[np.ndarray, np.ndarray], np.ndarray]
    value_rhs: Callable[..., tuple[np.ndarray, np.ndarray]]
    y0: np.ndarray
    v_terminal: np.ndarray
    myopic_policy: np.ndarray
    events: tuple[tuple[int, float], ...] = ()

    def __post_init__(self):
        mesh = np.asarray(self.mesh, dtype=float)
        if np.any(np.diff(mesh) < 0.0):
            raise ValueError("mesh times must be nondecreasing")
        for i, _ in self.events:
            if mesh[i] != mesh[i + 1]:
                raise ValueError(f"event at node {i} is not a duplicated mesh time")
        object.__setattr__(self, "mesh", mesh)
        object.__setattr__(self, "y0", np.asarray(self.y0, dtype=float))
        object.__setattr__(self, "v_terminal", np.asarray(self.v_terminal, dtype=float))
        object.__setattr__(self, "myopic_policy", np.asarray(self.myopic_policy, dtype=float))


@dataclass(frozen=True)
class EquilibriumSolution:
    """Converged Nash equilibrium on the problem mesh."""

    t: np.ndarray
    forward: np.ndarray  # (n_nodes, forward_dim)
    values: np.ndarray   # (n_nodes, value_dim)
    policy: np.ndarray   # (n_nodes, policy_dim)
    report: SolveReport


def build_mesh(schedule: HorizonSchedule, n_nodes: int = 601):
    """Uniform mesh on [0, T_n] with duplicated interior event nodes.

    Returns (mesh, events) where events holds (first-node index,
    theta_tilde) per interior candidate terminal time.
    """
    T = schedule.final_time
    base = np.linspace(0.0, T, n_nodes)
    tt = conditional_probs(schedule)
    points = list(base)
    for T_k in schedule.times[:-1]:
        # snap to an existing node when T_k already lies on the grid
        j = int(np.argmin(np.abs(base - T_k)))
        if abs(base[j] - T_k) > 1e-9 * max(T, 1.0):
            points.append(float(T_k))
    points.sort()
    mesh = []
    events = []
    for x in points:
        mesh.append(x)
        for k, T_k in enumerate(schedule.times[:-1]):
            snapped = abs(x - T_k) <= 1e-9 * max(T, 1.0)
            if snapped:
                events.append((len(mesh) - 1, float(tt[k])))
                mesh.append(x)  # duplicate: left and right limits
                break
    return np.asarray(mesh), tuple(events)


def _integrate_forward(mesh, rhs, y0, policy):
    n = len(mesh)
    Y = np.empty((n, len(y0)))
    Y[0] = y0
    for i in range(n - 1):
        ht = mesh[i + 1] - mesh[i]
        if ht == 0.0:  # event node: forward state is continuous
            Y[i + 1] = Y[i]
            continue
        p0, p1 = policy[i], policy[i + 1]
        pm = 0.5 * (p0 + p1)
        y = Y[i]
        k1 = rhs(y, p0)
        k2 = rhs(y + 0.5 * ht * k1, pm)
        k3 = rhs(y + 0.5 * ht * k2, pm)
        k4 = rhs(y + ht * k3, p1)
        Y[i + 1] = y + (ht / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return Y


def _integrate_backward(problem: BvpProblem, Y, forced_policy=None):
    """Backward value sweep along Y; returns (values, node policies)."""
    mesh = problem.mesh
    n = len(mesh)
    jump_at = dict(problem.events)
    V = np.empty((n, len(problem.v_terminal)))
    V[-1] = problem.v_terminal
    for i in range(n - 2, -1, -1):
        ht = mesh[i + 1] - mesh[i]
        if ht == 0.0:
            theta = jump_at.get(i)
            if theta is None:
                V[i] = V[i + 1]
            else:
                V[i] = apply_value_jump(V[i + 1], theta, problem.v_terminal)
            continue
        y0, y1 = Y[i], Y[i + 1]
        ym = 0.5 * (y0 + y1)
        if forced_policy is None:
            args0, argsm, args1 = (), (), ()
        else:
            pm = 0.5 * (forced_policy[i] + forced_policy[i + 1])
            args0, argsm, args1 = (forced_policy[i],), (pm,), (forced_policy[i + 1],)
        v = V[i + 1]
        k1, _ = problem.value_rhs(v, y1, *args1)
        k2, _ = problem.value_rhs(v - 0.5 * ht * k1, ym, *argsm)
        k3, _ = problem.value_rhs(v - 0.5 * ht * k2, ym, *argsm)
        k4, _ = problem.value_rhs(v - ht * k3, y0, *args0)
        V[i] = v - (ht / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    P = np.empty((n, len(problem.myopic_policy)))
    for i in range(n):
        _, P[i] = problem.value_rhs(V[i], Y[i])
    return V, P


def initial_guess(problem: BvpProblem, fixed_policy=None):
    """Trajectory pair under a frozen policy (default: the myopic rates).

    The forward path integrates the population under the fixed policy; the
    backward path integrates the value equations with the best response
    replaced by that same policy. Boundary and jump conditions hold by
    construction.
    """
    if fixed_policy is None:
        fixed_policy = problem.myopic_policy
    pol = np.tile(np.asarray(fixed_policy, dtype=float), (len(problem.mesh), 1))
    Y = _integrate_forward(problem.mesh, problem.forward_rhs, problem.y0, pol)
    V, _ = _integrate_backward(problem, Y, forced_policy=pol)
    return Y, V, pol


def _sweep(problem, pol, tol, omega, max_iters):
    """Damped fixed-point iterations from the given policy table."""
    Y = _integrate_forward(problem.mesh, problem.forward_rhs, problem.y0, pol)
    residual = np.inf
    for it in range(1, max_iters + 1):
        V, P = _integrate_backward(problem, Y)
        res_policy = float(np.max(np.abs(P - pol)))
        pol = pol + omega * (P - pol)
        Y_new = _integrate_forward(problem.mesh, problem.forward_rhs, problem.y0, pol)
        res_forward = float(np.max(np.abs(Y_new - Y)))
        Y = Y_new
        residual = max(res_policy, res_forward)
        if residual < tol:
            return True, pol, Y, residual, it
    return False, pol, Y, residual, max_iters


def solve(
    problem: BvpProblem,
    guess_policy=None,
    tol: float = 1e-6,
    omega: float = 0.5,
    max_iters: int = 200,
    max_halvings: int = 5,
    max_refinements: int = 2,
):
    """Solve the forward-backward system to a Nash fixed point.

    Returns an EquilibriumSolution whose policy is the exact pointwise best
    response under the returned values and whose forward trajectory is the
    exact integral under that policy. The certificate residual measures how
    far one more fixed-point application moves the solution; converged
    solves keep it within a small multiple of tol.

    On stalling, the damping factor omega is halved up to max_halvings
    times; if the sweep still fails the mesh is doubled up to
    max_refinements times. Raises NonConvergence or MeshExhausted with the
    final report attached.
    """
    start = time.perf_counter()
    total_iters = 0
    current = problem

    for refinement in range(max_refinements + 1):
        if guess_policy is None:
            pol = np.tile(current.myopic_policy, (len(current.mesh), 1))
        else:
            pol = np.asarray(guess_policy, dtype=float).copy()
            if pol.shape != (len(current.mesh), len(current.myopic_policy)):
                raise ValueError(
                    f"guess policy shape {pol.shape} does not match "
                    f"({len(current.mesh)}, {len(current.myopic_policy)})"
                )
        w = omega
        for halving in range(max_halvings + 1):
            ok, pol, Y, residual, its = _sweep(current, pol, tol, w, max_iters)
            total_iters += its
            if ok:
                V, P = _integrate_backward(current, Y)
                Y_final = _integrate_forward(current.mesh, current.forward_rhs, current.y0, P)
                certificate = max(
                    float(np.max(np.abs(P - pol))), float(np.max(np.abs(Y_final - Y)))
                )
                report = SolveReport(
                    converged=True,
                    residual_norm=residual,
                    iterations=total_iters,
                    mesh_size=len(current.mesh),
                    wall_time=time.perf_counter() - start,
                    omega_final=w,
                    certificate_residual=certificate,
                )
                return EquilibriumSolution(current.mesh.copy(), Y_final, V, P, report)
            w *= 0.5
        if refinement < max_refinements:
            current, pol_map = _refine(current)
            guess_policy = pol_map(pol)

    report = SolveReport(
        converged=False,
        residual_norm=residual,
        iterations=total_iters,
        mesh_size=len(current.mesh),
        wall_time=time.perf_counter() - start,
        omega_final=w,
    )
    if max_refinements > 0:
        raise MeshExhausted(
            f"no convergence after {max_refinements} mesh refinements "
            f"(last residual {residual:.3e})",
            report,
        )
    raise NonConvergence(f"fixed-point sweep stalled at residual {residual:.3e}", report)


def _refine(problem: BvpProblem):
    """Insert midpoints between distinct mesh nodes; remap events and policy."""
    mesh = problem.mesh
    new_mesh = []
    index_map = []  # old node index -> new node index
    for i in range(len(mesh) - 1):
        index_map.append(len(new_mesh))
        new_mesh.append(mesh[i])
        if mesh[i + 1] > mesh[i]:
            new_mesh.append(0.5 * (mesh[i] + mesh[i + 1]))
    index_map.append(len(new_mesh))
    new_mesh.append(mesh[-1])
    events = tuple((index_map[i], th) for i, th in problem.events)
    refined = replace(problem, mesh=np.asarray(new_mesh), events=events)

    def pol_map(pol):
        out = np.empty((len(new_mesh), pol.shape[1]))
        out[index_map] = pol
        for i in range(len(mesh) - 1):
            if mesh[i + 1] > mesh[i]:
                out[index_map[i] + 1] = 0.5 * (pol[i] + pol[i + 1])
        return out

    return refined, pol_map


def continuation_in_m(
    build_problem: Callable[[int], tuple[BvpProblem, np.ndarray]],
    target_m: int,
    coarse_m: int = 10,
    tol: float = 1e-6,
    growth: float = 1.4,
    **solve_kwargs,
):
    """Solve a structured problem at target_m, laddering up from coarse_m.

    build_problem(m) must return (problem, band centers). Below the coarse
    threshold the problem is solved directly; above it, each ladder level's
    converged policy is interpolated in p as the next level's guess. Solver
    failures are re-raised with the failing m attached.
    """
    if target_m < 1:
        raise ValueError("target_m must be >= 1")
    ladder = [min(coarse_m, target_m)]
    while ladder[-1] < target_m:
        ladder.append(min(target_m, int(np.ceil(ladder[-1] * growth))))

    sol = None
    p_prev = None
    guess = None
    for m in ladder:
        prob, p_centers = build_problem(m)
        if sol is not None:
            W = _interp_matrix(p_prev, p_centers)
            guess = sol.policy @ W.T
        try:
            sol = solve(prob, guess_policy=guess, tol=tol, **solve_kwargs)
        except (NonConvergence, MeshExhausted) as err:
            raise type(err)(f"continuation failed at m={m}: {err}", err.report) from err
        p_prev = p_centers
    return sol


def _interp_matrix(p_old, p_new):
    """Rows are linear-interpolation weights of p_new points in the p_old grid."""
    idx = np.clip(np.searchsorted(p_old, p_new) - 1, 0, len(p_old) - 2)
    t = (p_new - p_old[idx]) / (p_old[idx + 1] - p_old[idx])
    t = np.clip(t, 0.0, 1.0)
    W = np.zeros((len(p_new), len(p_old)))
    rows = np.arange(len(p_new))
    W[rows, idx] = 1.0 - t
    W[rows, idx + 1] += t
    return W
