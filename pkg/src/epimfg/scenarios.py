"""Scenario definitions, metric computation, and result serialization.

A scenario pins one model variant (plain SIRSD with myopic contacts, the
MFG-SIRSD game, or a p-structured waning/belief game), its parameters, an
initial condition, a horizon schedule, and solver settings. Configs load
from and save to small YAML documents with strict schema checking.
"""

from __future__ import annotations

import io
import json
from dataclasses import asdict, dataclass, field, replace

import numpy as np
import yaml

from .bvp import (
    BvpProblem,
    EquilibriumSolution,
    MeshExhausted,
    NonConvergence,
    SolveReport,
    build_mesh,
    continuation_in_m,
    initial_guess,
    solve,
)
from .dynamics import (
    Grid,
    belief_drift_spec,
    mfg_sirsd_value_rhs,
    sirsd_rhs,
    structured_forward_rhs,
    structured_value_rhs,
    waning_drift,
)
from .horizon import HorizonSchedule, parse_horizon_spec
from .model import EpiParams, ModelParams, Penalties, UtilityParams

__all__ = [
    "MODELS",
    "SolverSettings",
    "ScenarioConfig",
    "SweepConfig",
    "Metrics",
    "ScenarioResult",
    "build_problem",
    "run_scenario",
    "builtin_scenarios",
    "config_to_yaml",
    "config_from_yaml",
    "write_trajectory_csv",
    "write_metrics_record",
]

MODELS = ("sirsd-myopic", "mfg-sirsd", "waning", "waning-myopic", "belief")
_STRUCTURED = ("waning", "waning-myopic", "belief")
_MYOPIC = ("sirsd-myopic", "waning-myopic")


@dataclass(frozen=True)
class SolverSettings:
    tol: float = 1e-6
    omega: float = 0.5
    n_nodes: int = 601
    max_iters: int = 200
    max_halvings: int = 5
    max_refinements: int = 2
    coarse_m: int = 10

    def __post_init__(self):
        if self.tol <= 0.0:
            raise ValueError("tol must be positive")
        if not 0.0 < self.omega <= 1.0:
            raise ValueError("omega must be in (0, 1]")
        if self.n_nodes < 2 or self.max_iters < 1 or self.coarse_m < 1:
            raise ValueError("n_nodes, max_iters and coarse_m must be positive")
        if self.max_halvings < 0 or self.max_refinements < 0:
            raise ValueError("retry budgets must be nonnegative")


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    model: str
    horizon: HorizonSchedule
    m: int = 1
    alpha: float | None = None  # None picks the model default
    I0: float = 5e-3
    D0: float = 0.0
    params: ModelParams = field(default_factory=ModelParams)
    solver: SolverSettings = field(default_factory=SolverSettings)

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; expected one of {MODELS}")
        if self.model in _STRUCTURED and self.m < 1:
            raise ValueError("structured models need m >= 1")
        if not 0.0 <= self.I0 <= 1.0 or not 0.0 <= self.D0 <= 1.0 or self.I0 + self.D0 > 1.0:
            raise ValueError("initial fractions must be in [0, 1] and sum to at most 1")

    @property
    def effective_alpha(self) -> float:
        if self.alpha is not None:
            return self.alpha
        return self.params.epi.gamma if self.model.startswith("waning") else 0.1


@dataclass(frozen=True)
class SweepConfig:
    """A family of scenarios over termination probabilities theta.

    Each theta produces a two-point horizon (T_jump: theta, T_end: 1-theta)
    member scenario. Not directly runnable; expand with members().
    """

    name: str
    base: ScenarioConfig
    thetas: tuple[float, ...]
    T_jump: float
    T_end: float

    def members(self) -> list[ScenarioConfig]:
        out = []
        for theta in self.thetas:
            sched = HorizonSchedule((self.T_jump, self.T_end), (theta, 1.0 - theta))
            out.append(replace(self.base, name=f"{self.name}-theta-{theta:g}", horizon=sched))
        return out


@dataclass(frozen=True)
class Metrics:
    """Summary statistics of one scenario.

    For uncertain horizons peak_I, mean_I and final_D are expectations over
    the horizon distribution (each branch truncated at its T_k); with a
    deterministic horizon these coincide with the plain full-path
    statistics, which are always available as mean_I_path / final_D_path.
    argmax_t locates the full-path maximum of I.
    """

    peak_I: float
    mean_I: float
    final_D: float
    argmax_t: float
    mean_I_path: float
    final_D_path: float

    def __post_init__(self):
        if not (-1e-12 <= self.mean_I <= self.peak_I + 1e-12 <= 1.0 + 1e-12):
            raise ValueError(f"metrics violate 0 <= mean_I <= peak_I <= 1: {self}")
        if not -1e-12 <= self.final_D <= 1.0 + 1e-12:
            raise ValueError(f"final_D outside [0, 1]: {self.final_D}")


@dataclass(frozen=True)
class ScenarioResult:
    config: ScenarioConfig
    columns: list[str]
    table: np.ndarray  # (n_nodes, len(columns))
    metrics: Metrics
    report: SolveReport
    solution: EquilibriumSolution


def compute_metrics(t, I, D, schedule: HorizonSchedule) -> Metrics:
    """Peak/mean/final statistics, horizon-expected when the horizon is random."""
    t = np.asarray(t, dtype=float)
    I = np.asarray(I, dtype=float)
    D = np.asarray(D, dtype=float)
    mean_path = float(np.trapezoid(I, t) / schedule.final_time)
    final_path = float(D[-1])
    peak = mean = final = 0.0
    for T_k, theta_k in zip(schedule.times, schedule.probs):
        sel = t <= T_k * (1.0 + 1e-12)
        peak += theta_k * float(I[sel].max())
        mean += theta_k * float(np.trapezoid(I[sel], t[sel]) / T_k)
        final += theta_k * float(D[sel][-1])
    argmax_t = float(t[int(np.argmax(I))])
    return Metrics(peak, mean, final, argmax_t, mean_path, final_path)


def build_problem(config: ScenarioConfig):
    """Assemble the forward-backward problem; returns (problem, band centers).

    Band centers are None for the scalar models. The structured builder is
    parameterized over m so continuation can reuse it.
    """
    if config.model in _STRUCTURED:
        return _structured_problem(config, config.m)
    return _scalar_problem(config), None


def _scalar_problem(config: ScenarioConfig) -> BvpProblem:
    params = config.params
    mesh, events = build_mesh(config.horizon, config.solver.n_nodes)
    c_I = params.cbar_I

    def frhs(y, pol):
        return sirsd_rhs(y, (pol[0], c_I), params.epi)

    def vrhs(v, y, pol=None):
        dv, c = mfg_sirsd_value_rhs(v, y[1], c_I, params, c_S=None if pol is None else pol[0])
        return dv, np.array([c])

    y0 = np.array([1.0 - config.I0 - config.D0, config.I0, 0.0, config.D0])
    psi_N = params.penalties.psi_N
    v_term = np.array([psi_N, params.psi_I, psi_N])
    return BvpProblem(mesh, frhs, vrhs, y0, v_term, np.array([params.cbar_N]), events)


def _structured_problem(config: ScenarioConfig, m: int):
    params = config.params
    grid = Grid(m=m, alpha=config.effective_alpha)
    drift = belief_drift_spec(params) if config.model == "belief" else waning_drift(params.epi)
    mesh, events = build_mesh(config.horizon, config.solver.n_nodes)

    def frhs(y, pol):
        return structured_forward_rhs(y, pol, drift, grid, params)

    def vrhs(v, y, pol=None):
        return structured_value_rhs(v, y, drift, grid, params, policy=pol)

    y0 = np.zeros(m + 3)
    y0[0] = 1.0 - config.I0 - config.D0  # everyone starts without immunity
    y0[m + 1] = config.I0
    y0[m + 2] = config.D0
    v_term = np.concatenate([np.full(m + 1, params.penalties.psi_N), [params.psi_I]])
    problem = BvpProblem(mesh, frhs, vrhs, y0, v_term, np.full(m + 1, params.cbar_N), events)
    return problem, grid.p


def run_scenario(config: ScenarioConfig) -> ScenarioResult:
    """Solve (or, for myopic models, integrate) one scenario.

    Solver failures are re-raised with the scenario name attached.
    """
    s = config.solver
    try:
        if config.model in _MYOPIC:
            problem = build_problem(config)[0]
            Y, V, pol = initial_guess(problem)
            report = SolveReport(
                converged=True, residual_norm=0.0, iterations=0,
                mesh_size=len(problem.mesh), wall_time=0.0,
                omega_final=s.omega, certificate_residual=0.0,
            )
            solution = EquilibriumSolution(problem.mesh.copy(), Y, V, pol, report)
        elif config.model == "mfg-sirsd":
            problem, _ = build_problem(config)
            solution = solve(
                problem, tol=s.tol, omega=s.omega, max_iters=s.max_iters,
                max_halvings=s.max_halvings, max_refinements=s.max_refinements,
            )
        else:  # structured equilibrium models
            if config.m <= s.coarse_m:
                problem, _ = build_problem(config)
                solution = solve(
                    problem, tol=s.tol, omega=s.omega, max_iters=s.max_iters,
                    max_halvings=s.max_halvings, max_refinements=s.max_refinements,
                )
            else:
                solution = continuation_in_m(
                    lambda m: _structured_problem(config, m), config.m,
                    coarse_m=s.coarse_m, tol=s.tol, omega=s.omega,
                    max_iters=s.max_iters, max_halvings=s.max_halvings,
                    max_refinements=s.max_refinements,
                )
    except (NonConvergence, MeshExhausted) as err:
        raise type(err)(f"scenario {config.name!r}: {err}", err.report) from err

    columns, table = _tabulate(config, solution)
    i_col = columns.index("I")
    d_col = columns.index("D")
    metrics = compute_metrics(solution.t, table[:, i_col], table[:, d_col], config.horizon)
    return ScenarioResult(config, columns, table, metrics, solution.report, solution)


def _tabulate(config: ScenarioConfig, sol: EquilibriumSolution):
    if config.model in _STRUCTURED:
        m = config.m
        columns = (
            ["t"]
            + [f"N_{j}" for j in range(m + 1)]
            + ["I", "D"]
            + [f"V_{j}" for j in range(m + 1)]
            + ["V_I"]
            + [f"c_{j}" for j in range(m + 1)]
        )
    else:
        columns = ["t", "S", "I", "R", "D", "V_S", "V_I", "V_R", "c_S"]
    table = np.column_stack([sol.t, sol.forward, sol.values, sol.policy])
    assert table.shape[1] == len(columns)
    return columns, table


def builtin_scenarios() -> dict:
    """Named scenario set reproducing the reference experiments."""
    base = dict(params=ModelParams(), I0=5e-3, D0=0.0)
    det = HorizonSchedule.deterministic(300.0)
    five = HorizonSchedule((50.0, 100.0, 200.0, 285.0, 300.0), (0.2, 0.1, 0.05, 0.5, 0.15))
    mfg_base = ScenarioConfig(name="fig3-base", model="mfg-sirsd", horizon=det, **base)
    return {
        "fig1-mfg": ScenarioConfig(name="fig1-mfg", model="mfg-sirsd", horizon=det, **base),
        "fig1-myopic": ScenarioConfig(name="fig1-myopic", model="sirsd-myopic", horizon=det, **base),
        "fig2a-waning": ScenarioConfig(name="fig2a-waning", model="waning", m=8, horizon=det, **base),
        "fig2a-waning-myopic": ScenarioConfig(
            name="fig2a-waning-myopic", model="waning-myopic", m=8, horizon=det, **base
        ),
        "fig2b-belief": ScenarioConfig(name="fig2b-belief", model="belief", m=8, horizon=det, **base),
        "fig3-sweep": SweepConfig(
            name="fig3", base=mfg_base, thetas=(0.1, 0.5, 0.9), T_jump=150.0, T_end=300.0
        ),
        "fig4-belief-horizon": ScenarioConfig(
            name="fig4-belief-horizon", model="belief", m=4, horizon=five, **base
        ),
    }


# --- config serialization ---

_TOP_KEYS = {"name", "model", "m", "alpha", "I0", "D0", "horizon", "params", "solver"}
_PARAM_KEYS = {"beta", "mu", "gamma", "delta", "g", "b_N", "b_I", "a_N", "a_I", "psi_D", "psi_N"}
_SOLVER_KEYS = {f.name for f in SolverSettings.__dataclass_fields__.values()}
_REQUIRED = {"name", "model", "horizon"}


def config_to_yaml(config: ScenarioConfig) -> str:
    doc = {
        "name": config.name,
        "model": config.model,
        "m": config.m,
        "I0": config.I0,
        "D0": config.D0,
        "horizon": ",".join(
            f"{t:g}:{q:g}" for t, q in zip(config.horizon.times, config.horizon.probs)
        ),
        "params": {
            "beta": config.params.epi.beta,
            "mu": config.params.epi.mu,
            "gamma": config.params.epi.gamma,
            "delta": config.params.epi.delta,
            "g": config.params.util.g,
            "b_N": config.params.util.b_N,
            "b_I": config.params.util.b_I,
            "a_N": config.params.util.a_N,
            "a_I": config.params.util.a_I,
            "psi_D": config.params.penalties.psi_D,
            "psi_N": config.params.penalties.psi_N,
        },
        "solver": asdict(config.solver),
    }
    if config.alpha is not None:
        doc["alpha"] = config.alpha
    return yaml.safe_dump(doc, sort_keys=False)


class ConfigError(ValueError):
    """Config file rejected; message carries a line number when known."""


def _key_lines(text: str) -> dict:
    """Map (section, key) paths to 1-based line numbers via the YAML AST."""
    try:
        root = yaml.compose(io.StringIO(text))
    except yaml.MarkedYAMLError as err:
        line = err.problem_mark.line + 1 if err.problem_mark else 0
        raise ConfigError(f"line {line}: invalid YAML: {err.problem}") from None
    lines = {}
    if root is None or not isinstance(root, yaml.MappingNode):
        raise ConfigError("line 1: config must be a key-value mapping")
    for key_node, val_node in root.value:
        lines[(key_node.value,)] = key_node.start_mark.line + 1
        if isinstance(val_node, yaml.MappingNode):
            for sub_key, _ in val_node.value:
                lines[(key_node.value, sub_key.value)] = sub_key.start_mark.line + 1
    return lines


def config_from_yaml(text: str) -> ScenarioConfig:
    """Parse and validate a scenario config; unknown keys are rejected.

    Errors raise ConfigError with the offending line number.
    """
    lines = _key_lines(text)
    data = yaml.safe_load(text)

    def fail(path, msg):
        line = lines.get(path, 0)
        raise ConfigError(f"line {line}: {msg}")

    for (key, *rest) in lines:
        if not rest and key not in _TOP_KEYS:
            fail((key,), f"unknown key {key!r}")
    for key in _REQUIRED:
        if key not in data:
            raise ConfigError(f"line 1: missing required key {key!r}")
    for sub, allowed in (("params", _PARAM_KEYS), ("solver", _SOLVER_KEYS)):
        for path in lines:
            if len(path) == 2 and path[0] == sub and path[1] not in allowed:
                fail(path, f"unknown {sub} key {path[1]!r}")

    try:
        horizon = parse_horizon_spec(str(data["horizon"]))
    except ValueError as err:
        fail(("horizon",), f"bad horizon: {err}")

    p = dict(data.get("params") or {})
    params = ModelParams(
        epi=EpiParams(
            beta=p.get("beta", 0.05), mu=p.get("mu", 0.1),
            gamma=p.get("gamma", 1.0 / 90.0), delta=p.get("delta", 1e-3),
        ),
        util=UtilityParams(
            g=p.get("g", 0.25), b_N=p.get("b_N", 10.0), b_I=p.get("b_I", 6.0),
            a_N=p.get("a_N", 0.0), a_I=p.get("a_I", 4.0),
        ),
        penalties=Penalties(psi_D=p.get("psi_D", -1000.0), psi_N=p.get("psi_N", 0.0)),
    )
    try:
        solver = SolverSettings(**(data.get("solver") or {}))
        return ScenarioConfig(
            name=str(data["name"]),
            model=str(data["model"]),
            horizon=horizon,
            m=int(data.get("m", 1)),
            alpha=data.get("alpha"),
            I0=float(data.get("I0", 5e-3)),
            D0=float(data.get("D0", 0.0)),
            params=params,
            solver=solver,
        )
    except (TypeError, ValueError) as err:
        raise ConfigError(f"line 1: {err}") from None


# --- output files ---

def write_trajectory_csv(path, columns, table) -> None:
    """CSV with a mandatory header row and 10-significant-digit floats."""
    with open(path, "w") as fh:
        fh.write(",".join(columns) + "\n")
        for row in np.asarray(table):
            fh.write(",".join(f"{x:.10g}" for x in row) + "\n")


def write_metrics_record(path, metrics: Metrics, report: SolveReport) -> None:
    """Single JSON record of summary metrics and solver report fields.

    Wall time is deliberately omitted so identical runs produce identical
    bytes.
    """
    doc = {
        "peak_I": metrics.peak_I,
        "mean_I": metrics.mean_I,
        "final_D": metrics.final_D,
        "argmax_t": metrics.argmax_t,
        "mean_I_path": metrics.mean_I_path,
        "final_D_path": metrics.final_D_path,
        "converged": report.converged,
        "residual_norm": report.residual_norm,
        "iterations": report.iterations,
        "mesh_size": report.mesh_size,
        "certificate_residual": report.certificate_residual,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
