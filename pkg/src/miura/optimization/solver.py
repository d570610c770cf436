"""Newton's method on the KKT conditions of min E(y) s.t. g(y) = 0.

Each iteration solves the saddle-point system

    [H + tau I   J^T      ] [dy  ]     [grad_y L]
    [J           -delta I ] [dlam] = - [g       ]

with H the Hessian of L(y, lam) = E(y) + lam^T g(y), then updates
y += alpha dy, lam += alpha dlam. With damping on, the full step is kept when it
lowers the merit |grad_y L|^2 + |g|^2; otherwise alpha is capped by an adaptive
trust radius and backtracked to sufficient decrease, with trial points projected
into the chart rectangle less a boundary margin. With damping off, alpha only
backtracks to keep every vertex inside the rectangle.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.sparse import bmat, csc_matrix, csr_matrix, identity
from scipy.sparse.linalg import splu

from ..core.config import SolverConfig
from ..core.errors import (DegenerateEdgeError, DegenerateFanError, DomainError, LinearSolveError,
                           SingularChartError)
from ..geometry.pattern import QuadPattern, fold
from ..geometry.surface import OffsetPair
from .constraints import ConstraintSet, assemble_folded
from .energy import EnergyModel, EnergyValue

logger = logging.getLogger(__name__)

RESIDUAL_RTOL = 1e-10
_TRIAL_ERRORS = (DegenerateEdgeError, DegenerateFanError, DomainError, SingularChartError)


class SolveStatus(str, Enum):
    CONVERGED = "converged"
    MAX_ITERS = "max-iters"
    LINEAR_SOLVE_FAILURE = "linear-solve-failure"
    DOMAIN_EXIT = "domain-exit"
    LINE_SEARCH_FAILURE = "line-search-failure"


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    E_l: float
    E_mu: float
    E_c: float
    energy: float
    max_g_planarity: float
    max_g_develop: float
    stationarity: float
    merit: float
    step: float
    tau: float
    backtracks: int


@dataclass
class SolveReport:
    iterations: int
    final_feas: float
    final_stat: float
    status: SolveStatus
    energy_trace: list[TraceRecord] = field(default_factory=list)
    message: str = ""

    @property
    def converged(self) -> bool:
        return self.status is SolveStatus.CONVERGED


@dataclass(eq=False)
class KKTState:
    y: np.ndarray
    lam: np.ndarray
    energy: EnergyValue
    constraints: ConstraintSet
    grad_L: np.ndarray

    @property
    def g(self) -> np.ndarray:
        return self.constraints.g

    @property
    def J(self) -> csr_matrix:
        return self.constraints.J

    @property
    def feasibility(self) -> float:
        return float(np.max(np.abs(self.g))) if self.g.size else 0.0

    @property
    def stationarity(self) -> float:
        return float(np.max(np.abs(self.grad_L)))

    @property
    def merit(self) -> float:
        return float(self.grad_L @ self.grad_L + self.g @ self.g)

    def lagrangian_hessian(self) -> csr_matrix:
        return (self.energy.hessian + self.constraints.hessian_contraction(self.lam)).tocsr()


def kkt_step(H: csr_matrix, J: csr_matrix, grad_L: np.ndarray, g: np.ndarray, tau: float = 0.0,
             dual_regularization: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Newton update (dy, dlam) from the regularized KKT system."""
    dy, dl, _ = solve_kkt(H, J, grad_L, g, tau, dual_regularization)
    return dy, dl


def solve_kkt(H: csr_matrix, J: csr_matrix, grad_L: np.ndarray, g: np.ndarray, tau: float = 0.0,
              dual_regularization: float = 0.0) -> tuple[np.ndarray, np.ndarray, float]:
    """As kkt_step, also returning the max-norm residual of the solved system."""
    if tau < 0:
        raise ValueError(f"primal shift must be non-negative, got {tau}")
    n, m = H.shape[0], J.shape[0]
    if J.shape[1] != n or len(grad_L) != n or len(g) != m:
        raise ValueError(f"inconsistent KKT dimensions: H {H.shape}, J {J.shape}, "
                         f"grad {len(grad_L)}, g {len(g)}")
    Hs = csr_matrix(H) + tau * identity(n, format="csr")
    if m == 0:
        K = csc_matrix(Hs)
        rhs = -np.asarray(grad_L, dtype=float)
    else:
        C = -dual_regularization * identity(m, format="csr") if dual_regularization > 0 else None
        K = bmat([[Hs, csr_matrix(J).T], [csr_matrix(J), C]], format="csc")
        rhs = -np.concatenate([grad_L, g])
    try:
        sol = splu(K).solve(rhs)
    except RuntimeError as e:
        raise LinearSolveError(f"KKT factorization failed: {e}") from e
    if not np.all(np.isfinite(sol)):
        raise LinearSolveError("KKT solution is not finite")
    residual = float(np.max(np.abs(K @ sol - rhs)))
    bound = RESIDUAL_RTOL * (1.0 + float(np.max(np.abs(rhs))) if rhs.size else 1.0)
    if residual > bound:
        raise LinearSolveError(f"KKT residual {residual:.3e} exceeds {bound:.3e}")
    return sol[:n], sol[n:], residual


class NewtonKKTSolver:
    """Algorithm driver; one instance per (pattern, offset pair, energy model)."""

    def __init__(self, pattern: QuadPattern, pair: OffsetPair, model: EnergyModel, cfg: SolverConfig) -> None:
        self.pattern = pattern
        self.pair = pair
        self.model = model
        self.cfg = cfg
        self.domain = pair.chart.domain

    def evaluate(self, y: np.ndarray, lam: np.ndarray) -> KKTState:
        folded = fold(self.pattern, self.pair, y.reshape(-1, 2))
        energy = self.model.total(folded)
        cons = assemble_folded(self.pattern, folded)
        grad_L = energy.gradient + cons.J.T @ lam
        return KKTState(y=y, lam=lam, energy=energy, constraints=cons, grad_L=grad_L)

    def converged(self, state: KKTState) -> bool:
        return state.feasibility < self.cfg.tol_feas and state.stationarity < self.cfg.tol_stat

    def _inside(self, y: np.ndarray) -> bool:
        return bool(np.all(self.domain.contains(y.reshape(-1, 2), tol=0.0)))

    def _newton_direction(self, state: KKTState) -> tuple[np.ndarray, np.ndarray, float]:
        cfg = self.cfg
        H = state.lagrangian_hessian()
        tau = cfg.tau0
        last: LinearSolveError | None = None
        for attempt in range(cfg.max_regularizations + 1):
            try:
                dy, dl, residual = solve_kkt(H, state.J, state.grad_L, state.g, tau, cfg.dual_regularization)
                if cfg.debug_residual:
                    logger.info("KKT residual %.3e (tau=%.1e)", residual, tau)
                return dy, dl, tau
            except LinearSolveError as e:
                last = e
                logger.debug("KKT solve failed with tau=%.1e (attempt %d): %s", tau, attempt, e)
                tau = max(tau * cfg.tau_growth, cfg.tau_min)
        raise last

    def _trial(self, y: np.ndarray, lam: np.ndarray) -> KKTState | None:
        try:
            return self.evaluate(y, lam)
        except _TRIAL_ERRORS as e:
            logger.debug("trial point rejected: %s", e)
            return None

    def _line_search(self, state: KKTState, dy: np.ndarray, dl: np.ndarray, radius: float = np.inf
                     ) -> tuple[KKTState | None, float, int, bool]:
        """Accepted trial state, step length, backtrack count, and whether the domain clipped every trial.

        The full Newton step is kept whenever it stays in the domain and lowers the
        merit at all. Otherwise alpha starts at the trust radius over |dy|_inf and
        shrinks until the sufficient-decrease test passes; trial points are projected
        into the domain shrunk by the boundary margin.
        """
        cfg = self.cfg
        if not cfg.damping:
            return self._domain_backtrack(state, dy, dl)
        alpha, backtracks = 1.0, 0
        if self._inside(state.y + dy):
            full = self._trial(state.y + dy, state.lam + dl)
            if full is not None and full.merit < state.merit:
                return full, 1.0, 0, False
            alpha, backtracks = cfg.backtrack_factor, 1
        size = float(np.max(np.abs(dy))) if dy.size else 0.0
        if size > 0.0:
            alpha = min(alpha, radius / size)
        lo, hi = self.domain.bounds(cfg.boundary_margin)
        # coordinates already inside the margin band may stay where they are
        lo = np.minimum(np.tile(lo, self.pattern.n_vertices), state.y)
        hi = np.maximum(np.tile(hi, self.pattern.n_vertices), state.y)
        blocked = True
        while True:
            y_raw = state.y + alpha * dy
            y_try = np.clip(y_raw, lo, hi)
            blocked = blocked and not np.array_equal(y_try, y_raw)
            trial = self._trial(y_try, state.lam + alpha * dl)
            if trial is not None and trial.merit <= (1.0 - 2.0 * cfg.armijo * alpha) * state.merit:
                return trial, alpha, backtracks, False
            if backtracks >= cfg.max_backtracks:
                return None, alpha, backtracks, blocked
            alpha *= cfg.backtrack_factor
            backtracks += 1

    def _domain_backtrack(self, state: KKTState, dy: np.ndarray, dl: np.ndarray
                          ) -> tuple[KKTState | None, float, int, bool]:
        """Undamped Newton: shorten the step only to stay inside the domain."""
        alpha, backtracks = 1.0, 0
        while True:
            y_try = state.y + alpha * dy
            if self._inside(y_try):
                trial = self._trial(y_try, state.lam + alpha * dl)
                if trial is not None:
                    return trial, alpha, backtracks, False
            if backtracks >= self.cfg.max_backtracks:
                return None, alpha, backtracks, True
            alpha *= self.cfg.backtrack_factor
            backtracks += 1

    def initial_radius(self) -> float:
        """Trust radius in parameter units: max_step times the shortest initial edge."""
        v = self.pattern.vertices0
        e = self.pattern.edges
        shortest = float(np.min(np.linalg.norm(v[e[:, 1]] - v[e[:, 0]], axis=1)))
        return self.cfg.max_step * shortest

    def solve(self, y0: np.ndarray, lam0: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray, SolveReport]:
        cfg = self.cfg
        y = np.asarray(y0, dtype=float).ravel().copy()
        if not self._inside(y):
            raise DomainError("initial configuration leaves the parameter domain")
        lam = np.zeros(self.pattern.n_constraints) if lam0 is None else np.asarray(lam0, dtype=float).copy()
        state = self.evaluate(y, lam)
        radius = self.initial_radius()
        radius_max, radius_min = max(radius, radius / cfg.max_step), 1e-3 * radius
        trace: list[TraceRecord] = []
        status, message, iterations = SolveStatus.MAX_ITERS, "", 0
        while True:
            if self.converged(state):
                status = SolveStatus.CONVERGED
                break
            if iterations >= cfg.max_iters:
                break
            try:
                dy, dl, tau = self._newton_direction(state)
            except LinearSolveError as e:
                status, message = SolveStatus.LINEAR_SOLVE_FAILURE, str(e)
                break
            trial, alpha, backtracks, blocked = self._line_search(state, dy, dl, radius)
            if trial is None:
                status = SolveStatus.DOMAIN_EXIT if blocked else SolveStatus.LINE_SEARCH_FAILURE
                message = f"no acceptable step after {backtracks} backtracks"
                break
            moved = float(np.max(np.abs(trial.y - state.y)))
            radius = min(2.0 * radius, radius_max) if backtracks == 0 else max(moved, radius_min)
            state = trial
            iterations += 1
            rec = _record(iterations, state, alpha, tau, backtracks)
            trace.append(rec)
            logger.info("iter %3d  E=%.6e  E_l=%.3e  E_mu=%.3e  |g_p|=%.2e  |g_d|=%.2e  |dL|=%.2e  alpha=%.3g",
                        iterations, rec.energy, rec.E_l, rec.E_mu, rec.max_g_planarity, rec.max_g_develop,
                        rec.stationarity, alpha)

        if status is SolveStatus.CONVERGED:
            feas, stat = verify_kkt(self, state.y, state.lam)
            if not (feas < cfg.tol_feas and stat < cfg.tol_stat):
                status, message = SolveStatus.MAX_ITERS, "re-evaluation did not confirm convergence"
        report = SolveReport(iterations=iterations, final_feas=state.feasibility,
                             final_stat=state.stationarity, status=status, energy_trace=trace, message=message)
        logger.info("solver finished: %s after %d iterations (feas %.2e, stat %.2e)",
                    status.value, iterations, report.final_feas, report.final_stat)
        return state.y.reshape(-1, 2), state.lam, report


def _record(iteration: int, state: KKTState, alpha: float, tau: float, backtracks: int) -> TraceRecord:
    gp, gd = state.constraints.g_planarity, state.constraints.g_develop
    terms = state.energy.terms
    return TraceRecord(iteration=iteration, E_l=float(terms["length"]), E_mu=float(terms["mu"]),
                       E_c=float(terms["center"]), energy=state.energy.value,
                       max_g_planarity=float(np.max(np.abs(gp))) if gp.size else 0.0,
                       max_g_develop=float(np.max(np.abs(gd))) if gd.size else 0.0,
                       stationarity=state.stationarity, merit=state.merit, step=alpha, tau=tau,
                       backtracks=backtracks)


def verify_kkt(solver: NewtonKKTSolver, y: np.ndarray, lam: np.ndarray) -> tuple[float, float]:
    """max|g| and |grad_y L|_inf from a fresh evaluation at (y, lam)."""
    fresh = solver.evaluate(np.asarray(y, dtype=float).ravel().copy(), np.asarray(lam, dtype=float))
    return fresh.feasibility, fresh.stationarity


def optimize(pattern: QuadPattern, pair: OffsetPair, model: EnergyModel, cfg: SolverConfig,
             y0: np.ndarray) -> tuple[np.ndarray, np.ndarray, SolveReport]:
    return NewtonKKTSolver(pattern, pair, model, cfg).solve(y0)
