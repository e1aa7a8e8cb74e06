"""Fictitious-time iteration with an inner duality fixed point, fine or GMsFEM pressure solves."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .assembly import FineOperators, linearized_transport_matrix, transport_matrix
from .duality import DualityParams, recover_theta, update_alpha, update_beta
from .gmsfem import CoarseSolver, CoarseSpace, build_coarse_space
from .grid import CoarseMesh, FineMesh, Tag
from .numerics import DirichletSolver

log = logging.getLogger(__name__)

MODES = ("fine", "gmsfem")
TRANSPORTS = ("characteristics", "linearized")

# The multiplier operator M/dt + g M_flux loses definiteness on the impervious
# bottom once dt > h / (2 sqrt(3) g); the duality iteration then diverges.
STABLE_DT_FACTOR = 0.25


def stable_dt(mesh: FineMesh, g: float) -> float:
    h = min(mesh.hx, mesh.hy)
    return STABLE_DT_FACTOR * h / g if g > 0 else STABLE_DT_FACTOR * h


@dataclass(frozen=True)
class SolverConfig:
    dt: float | None = None      # None: STABLE_DT_FACTOR * h / g
    g: float = 1.0
    omega1: float = 0.5
    omega2: float = 0.5
    lambda1: float = 1.0
    lambda2: float = 1.0
    tol: float = 1e-4
    max_steps: int = 20000
    fixed_point_iters: int = 4     # even: see the note on odd counts in time_step
    mode: str = "fine"
    li: int = 1
    head_left: float = 3 / 5
    head_right: float = 2 / 5
    init: str = "hydrostatic"
    transport: str = "characteristics"

    def __post_init__(self):
        if self.dt is not None and self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.g < 0:
            raise ValueError("g must be nonnegative")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.fixed_point_iters < 1 or self.max_steps < 1:
            raise ValueError("iteration counts must be at least 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.li < 1:
            raise ValueError("li must be at least 1")
        if self.init not in ("hydrostatic", "saturated"):
            raise ValueError(f"unknown initialization {self.init!r}")
        if self.transport not in TRANSPORTS:
            raise ValueError(f"transport must be one of {TRANSPORTS}, got {self.transport!r}")
        DualityParams(self.omega1, self.omega2, self.lambda1, self.lambda2)

    def with_(self, **kw) -> "SolverConfig":
        return replace(self, **kw)


@dataclass
class DamState:
    p: np.ndarray
    theta: np.ndarray
    beta: np.ndarray
    alpha: np.ndarray            # on DamProblem.seepage nodes
    overshoot: float = 0.0       # largest pre-clip excursion of theta outside [0, 1]
    theta_range: tuple = (0.0, 1.0)


class DamProblem:
    """Everything about one mesh/coefficient pair that stays fixed during the iteration."""

    def __init__(self, mesh: FineMesh, kappa, config: SolverConfig):
        self.mesh = mesh
        self.kappa = kappa
        self.config = config
        self.dt = config.dt if config.dt is not None else stable_dt(mesh, config.g)
        limit = min(mesh.hx, mesh.hy) / (2 * np.sqrt(3) * config.g) if config.g > 0 else np.inf
        if self.dt > limit:
            log.warning("dt=%.3g exceeds the stability bound %.3g; the duality iteration "
                        "is likely to stall", self.dt, limit)
        self.ops = FineOperators.build(mesh, kappa)
        self.system = self.ops.system_matrix(self.dt, config.omega1, config.omega2, config.g)
        build = transport_matrix if config.transport == "characteristics" else linearized_transport_matrix
        self.transport = build(mesh, kappa, config.g, self.dt)
        self.fixed, self.fixed_values = mesh.dirichlet_data()
        self.lift = np.zeros(mesh.n_nodes)
        self.lift[self.fixed] = self.fixed_values
        self.seepage = mesh.boundary_nodes(Tag.SEEPAGE)

    def fine_solver(self) -> "FinePressureSolver":
        return FinePressureSolver(self)

    def coarse_solver(self, space_or_R0) -> "CoarsePressureSolver":
        R0 = space_or_R0.R0 if isinstance(space_or_R0, CoarseSpace) else space_or_R0
        return CoarsePressureSolver(self, R0)


class FinePressureSolver:
    def __init__(self, problem: DamProblem):
        self.problem = problem
        self._solver = DirichletSolver(problem.system, problem.fixed)

    def solve(self, rhs):
        return self._solver.solve(rhs, self.problem.fixed_values)


class CoarsePressureSolver:
    def __init__(self, problem: DamProblem, R0):
        self.problem = problem
        self._solver = CoarseSolver(R0, problem.system)

    @property
    def dim(self):
        return self._solver.dim

    def solve(self, rhs):
        return self._solver.solve(rhs, self.problem.lift)


def initial_state(problem: DamProblem, how: str | None = None) -> DamState:
    """Starting guess for the fictitious-time iteration.

    ``hydrostatic``: water table on the straight line joining the two lateral
    heads, pressure ``max(table - x2, 0)`` and full saturation below it.
    ``saturated``: pressure equal to the Dirichlet lift, saturation 1 everywhere.
    """
    cfg = problem.config
    how = how or cfg.init
    x = problem.mesh.coords
    if how == "saturated":
        p = problem.lift.copy()
        theta = np.ones(problem.mesh.n_nodes)
    elif how == "hydrostatic":
        heads = problem.mesh.partition.heads
        hl, hr = heads.get("left", cfg.head_left), heads.get("right", cfg.head_right)
        depth = hl + (hr - hl) * x[:, 0] - x[:, 1]
        p = np.maximum(depth, 0.0)
        p[problem.fixed] = problem.fixed_values
        theta = (depth >= -1e-12).astype(float)
    else:
        raise ValueError(f"unknown initialization {how!r}")
    beta = theta - cfg.omega2 * p
    alpha = np.zeros(problem.seepage.size)
    return DamState(p, theta, beta, alpha)


def time_step(problem: DamProblem, solver, state: DamState) -> DamState:
    """One fictitious-time step: transport, ``fixed_point_iters`` multiplier
    sweeps, saturation recovery.

    With omega * lambda = 1/2 both Yosida maps have slope -1 off the jump, so
    multiplier components the pressure solve cannot see (most of them for a
    coarse space) flip sign at every sweep.  An odd sweep count turns that into
    a period-two cycle of the outer loop; an even count leaves it inert.
    """
    cfg = problem.config
    ops = problem.ops
    b = problem.transport @ state.theta
    alpha, beta = state.alpha, state.beta
    alpha_full = np.zeros(problem.mesh.n_nodes)
    p = state.p
    for _ in range(cfg.fixed_point_iters):
        alpha_full[problem.seepage] = alpha
        p = solver.solve(ops.duality_rhs(b, alpha_full, beta, problem.dt, cfg.g))
        alpha = update_alpha(p[problem.seepage], alpha, cfg.omega1, cfg.lambda1)
        beta = update_beta(p, beta, cfg.omega2, cfg.lambda2)
    raw = beta + cfg.omega2 * p
    theta, overshoot = recover_theta(p, beta, cfg.omega2)
    return DamState(p, theta, beta, alpha, overshoot, (float(raw.min()), float(raw.max())))


@dataclass
class SteadyResult:
    state: DamState
    steps: int
    converged: bool
    increments: list = field(default_factory=list)
    seconds: float = 0.0


def run_to_steady(problem: DamProblem, solver=None, state: DamState | None = None) -> SteadyResult:
    """Step until the relative l2 pressure increment per unit fictitious time
    drops below ``tol``."""
    cfg = problem.config
    solver = solver if solver is not None else problem.fine_solver()
    state = state if state is not None else initial_state(problem)
    increments = []
    t0 = time.perf_counter()
    for n in range(1, cfg.max_steps + 1):
        new = time_step(problem, solver, state)
        inc = (np.linalg.norm(new.p - state.p)
               / (problem.dt * max(np.linalg.norm(state.p), 1e-300)))
        increments.append(float(inc))
        log.debug("step %d increment %.3e", n, inc)
        state = new
        if inc < cfg.tol:
            return SteadyResult(state, n, True, increments, time.perf_counter() - t0)
    log.warning("no steady state after %d steps (last increment %.3e)", cfg.max_steps, increments[-1])
    return SteadyResult(state, cfg.max_steps, False, increments, time.perf_counter() - t0)


def energy_error(p_ref, p_approx, A) -> float:
    """Relative energy-norm error in percent."""
    e = np.asarray(p_ref) - np.asarray(p_approx)
    denom = float(p_ref @ (A @ p_ref))
    if denom <= 0:
        raise ValueError("reference pressure has zero energy")
    return 100.0 * np.sqrt(max(float(e @ (A @ e)), 0.0) / denom)


@dataclass
class ErrorReport:
    li: int
    coarse_dim: int
    energy_error_percent: float
    fine_steps: int
    coarse_steps: int
    converged: bool


def sweep(mesh: FineMesh, coarse: CoarseMesh, kappa, config: SolverConfig, li_values,
          fine: SteadyResult | None = None):
    """Fine reference run plus one GMsFEM run per enrichment level.

    Returns ``(fine_result, [(ErrorReport, SteadyResult, CoarseSpace), ...])``.
    """
    problem = DamProblem(mesh, kappa, config)
    if fine is None:
        fine = run_to_steady(problem, problem.fine_solver())
    rows = []
    for li in li_values:
        space = build_coarse_space(coarse, kappa, li)
        res = run_to_steady(problem, problem.coarse_solver(space))
        err = energy_error(fine.state.p, res.state.p, problem.ops.stiffness)
        log.info("li=%d dim=%d error=%.3f%% steps fine/coarse %d/%d",
                 li, space.dim, err, fine.steps, res.steps)
        rows.append((ErrorReport(li, space.dim, err, fine.steps, res.steps,
                                 fine.converged and res.converged), res, space))
    return fine, rows
