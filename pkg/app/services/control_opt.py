"""
Pontryagin machinery for the lockdown problem: maximise
    J = integral of (c1 * P - exp(c2 * u)) dt
subject to the multi-strain dynamics, solved by a relaxed forward-backward sweep.
"""
import logging
import math
from typing import List, Optional, Sequence

import numpy as np
from scipy.integrate import trapezoid

from app.core.config import FBSM_MAX_ITER, FBSM_RELAXATION, FBSM_TOL
from app.core.errors import ConfigurationError, DomainError, EpidemicError, SolverError
from app.models.control import CostateState, CostParams, FbsmReport
from app.models.grid import ControlSchedule, SeedEvent, TimeGrid, Trajectory
from app.models.strain import EpidemicState, StrainParams
from app.services import kernels
from app.services.epi_model import (
    active_mask,
    check_control,
    check_state,
    full_coordinates,
    full_system_derivatives,
    rate_arrays,
)
from app.services.integrator import activation_steps, integrate

logger = logging.getLogger(__name__)


def running_cost(P: float, u: float, costs: CostParams) -> float:
    return costs.c1 * P - math.exp(costs.c2 * u)


def objective(traj: Trajectory, costs: CostParams, schedule: Optional[ControlSchedule] = None) -> float:
    """Trapezoid quadrature of the running cost over the trajectory grid."""
    u = traj.u
    if schedule is not None:
        if not schedule.grid.same_as(traj.grid):
            raise ConfigurationError("schedule and trajectory grids differ")
        u = schedule.u
    if traj.grid.N == 0:
        return 0.0
    integrand = costs.c1 * traj.P - np.exp(costs.c2 * u)
    return float(trapezoid(integrand, dx=traj.grid.dt))


def _check_costate(costate: CostateState, n: int) -> np.ndarray:
    if costate.n_strains != n:
        raise ConfigurationError(f"costate has {costate.n_strains} strains, parameters have {n}")
    phi = costate.to_vector()
    if not np.all(np.isfinite(phi)):
        raise DomainError("costate contains non-finite values")
    return phi


def costate_derivatives(state: EpidemicState, costate: CostateState, u: float,
                        params: Sequence[StrainParams], costs: CostParams) -> CostateState:
    """-dH/dx for every coordinate of the (P, S, E, I, R) system, S_j taken algebraically."""
    check_state(state, params)
    u = check_control(u)
    phi = _check_costate(costate, len(params))
    beta, sigma, gamma, delta, mu = rate_arrays(params)
    d_phi = kernels.costate_rhs(state.to_vector(), phi, beta, sigma, gamma, delta, mu,
                                active_mask(params, state.t), u, costs.c1)
    return CostateState.from_vector(state.t, d_phi, len(params))


def switching_function(state: EpidemicState, costate: CostateState, params: Sequence[StrainParams]) -> float:
    """sum_j S_j I_j beta_j (phi_S_j - phi_E_j); equals c2 * exp(c2 * u) at an interior optimum."""
    phi = _check_costate(costate, len(params))
    n = len(params)
    mask = active_mask(params, state.t)
    S = state.susceptible()
    beta = np.array([p.beta for p in params])
    gap = phi[1:1 + n] - phi[1 + n:1 + 2 * n]
    return float(np.sum(mask * S * np.asarray(state.I) * beta * gap))


def control_from_switching(s, c2: float):
    """Closed-form maximiser of H in u, projected onto [0, 1]. Works on scalars and arrays."""
    s = np.asarray(s, dtype=np.float64)
    # log argument <= 1 means the exponential cost always dominates
    u = np.log(np.maximum(s, c2) / c2) / c2
    u = np.clip(u, 0.0, 1.0)
    return float(u) if u.ndim == 0 else u


def optimal_u(state: EpidemicState, costate: CostateState, params: Sequence[StrainParams], costs: CostParams) -> float:
    return control_from_switching(switching_function(state, costate, params), costs.c2)


def hamiltonian(state: EpidemicState, costate: CostateState, u: float,
                params: Sequence[StrainParams], costs: CostParams) -> float:
    phi = _check_costate(costate, len(params))
    dz = full_system_derivatives(full_coordinates(state), params, u, state.t)
    return running_cost(state.P, u, costs) + float(np.dot(phi, dz))


# ---- forward-backward sweep ----

def _backward(Y: np.ndarray, u: np.ndarray, params: Sequence[StrainParams], grid: TimeGrid,
              costs: CostParams, act: np.ndarray) -> np.ndarray:
    beta, sigma, gamma, delta, mu = rate_arrays(params)
    Phi, status, step = kernels.integrate_costates(Y, u, beta, sigma, gamma, delta, mu, act,
                                                   float(grid.dt), float(costs.c1))
    if status != kernels.OK:
        raise SolverError(f"non-finite costate at step {step} of the backward sweep")
    return Phi


def _forward(initial: EpidemicState, params, u, grid, events) -> np.ndarray:
    try:
        return integrate(initial.to_vector(), params, u, grid, events)
    except EpidemicError as e:
        raise SolverError(f"forward sweep failed: {e}") from e


def fbsm_solve(initial: EpidemicState, params: Sequence[StrainParams], events: Optional[List[SeedEvent]],
               grid: TimeGrid, costs: CostParams, u_init: Optional[ControlSchedule] = None,
               relaxation: float = FBSM_RELAXATION, tol: float = FBSM_TOL,
               max_iter: int = FBSM_MAX_ITER) -> FbsmReport:
    if not (0.0 < relaxation <= 1.0):
        raise DomainError(f"relaxation must lie in (0, 1], got {relaxation}")
    if tol <= 0:
        raise DomainError(f"tol must be positive, got {tol}")
    if max_iter < 1:
        raise DomainError("max_iter must be at least 1")
    check_state(initial, params)
    events = events or []

    if u_init is None:
        u = np.zeros(grid.N + 1)
    else:
        if not u_init.grid.same_as(grid):
            raise ConfigurationError("initial schedule is defined on a different grid")
        u = np.array(u_init.u, dtype=np.float64)

    beta = rate_arrays(params)[0]
    act = activation_steps(params, grid)
    history: List[float] = []
    converged = False
    iterations = 0
    update = math.inf

    for iterations in range(1, max_iter + 1):
        Y = _forward(initial, params, u, grid, events)
        Phi = _backward(Y, u, params, grid, costs, act)
        target = control_from_switching(kernels.switching_values(Y, Phi, beta, act), costs.c2)
        if not np.all(np.isfinite(target)):
            raise SolverError(f"non-finite control update in iteration {iterations}")
        u_new = np.clip(relaxation * target + (1.0 - relaxation) * u, 0.0, 1.0)
        update = float(np.max(np.abs(u_new - u))) if u.size else 0.0
        u = u_new
        history.append(update)
        logger.debug("FBSM iteration %d: sup|du| = %.3e", iterations, update)
        if update < tol:
            converged = True
            break

    if converged:
        logger.info("FBSM converged in %d iterations (sup|du|=%.3e)", iterations, update)
    else:
        logger.warning("FBSM stopped at max_iter=%d with sup|du|=%.3e", max_iter, update)

    return evaluate_schedule(initial, params, events, grid, costs, ControlSchedule(grid=grid, u=u),
                             converged=converged, iterations=iterations, last_update=update,
                             history=history)


def evaluate_schedule(initial: EpidemicState, params: Sequence[StrainParams], events: Optional[List[SeedEvent]],
                      grid: TimeGrid, costs: CostParams, schedule: ControlSchedule,
                      converged: bool = True, iterations: int = 0, last_update: float = 0.0,
                      history: Optional[List[float]] = None) -> FbsmReport:
    """Forward and backward pass for a fixed schedule, packaged as a report."""
    if not schedule.grid.same_as(grid):
        raise ConfigurationError("schedule is defined on a different grid")
    u = np.array(schedule.u, dtype=np.float64)
    Y = _forward(initial, params, u, grid, events or [])
    Phi = _backward(Y, u, params, grid, costs, activation_steps(params, grid))
    traj = Trajectory(grid=grid, params=tuple(params), y=Y, u=u)
    J = objective(traj, costs)
    logger.info("schedule evaluated: J=%.6e, mean u=%.4f", J, float(np.mean(u)))
    return FbsmReport(
        converged=converged,
        iterations=iterations,
        objective=J,
        last_update=last_update,
        schedule=schedule,
        trajectory=traj,
        costates=Phi,
        update_history=history or [],
    )
