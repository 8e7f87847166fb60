"""Fixed-step RK4 integration with timed strain introductions."""
import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.core.config import CLAMP_REL_TOL
from app.core.errors import ConfigurationError, IntegrationError
from app.models.grid import ControlSchedule, SeedEvent, TimeGrid, Trajectory
from app.models.strain import EpidemicState, StrainParams
from app.services import kernels
from app.services.epi_model import active_mask, check_control, check_state, rate_arrays

logger = logging.getLogger(__name__)

_FAILURES = {
    kernels.NON_FINITE: "non-finite value in state",
    kernels.NEGATIVE_COMPARTMENT: "compartment fell below the negative tolerance",
    kernels.NEGATIVE_SUSCEPTIBLE: "susceptible pool fell below the negative tolerance",
    kernels.SEED_TOO_LARGE: "seed exceeds the population",
}


def rk4_step(state: EpidemicState, params: Sequence[StrainParams],
             u_now: float, u_mid: float, u_next: float, dt: float,
             step: int = 0) -> EpidemicState:
    check_state(state, params)
    for u in (u_now, u_mid, u_next):
        check_control(u)
    beta, sigma, gamma, delta, mu = rate_arrays(params)
    mask = active_mask(params, state.t)
    y = kernels.rk4_state_step(state.to_vector(), beta, sigma, gamma, delta, mu, mask,
                               float(u_now), float(u_mid), float(u_next), float(dt))
    status = kernels.clamp_state(y, len(params), CLAMP_REL_TOL * max(state.P, 1.0))
    _raise_on_status(status, step)
    return EpidemicState.from_vector(state.t + dt, y, len(params))


def activation_steps(params: Sequence[StrainParams], grid: TimeGrid) -> np.ndarray:
    """First grid index at which each strain is active; activation times must sit on the grid."""
    steps = []
    for j, p in enumerate(params):
        if p.activation_time <= grid.t0:
            steps.append(0)
            continue
        try:
            steps.append(grid.step_of(p.activation_time))
        except ConfigurationError as e:
            raise ConfigurationError(f"strain {j}: activation_time {p.activation_time} is not a multiple of dt={grid.dt}") from e
    return np.array(steps, dtype=np.int64)


def seed_arrays(events: Sequence[SeedEvent], grid: TimeGrid, n: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    events = list(events)
    if any(b.time < a.time for a, b in zip(events, events[1:])):
        raise ConfigurationError("seed events must be sorted by time")
    steps, strains, values = [], [], []
    for ev in events:
        if ev.strain >= n:
            raise ConfigurationError(f"seed event names strain {ev.strain}, only {n} strains exist")
        k = grid.step_of(ev.time)
        if k > grid.N:
            logger.warning("seed event at t=%s is past the horizon and is ignored", ev.time)
            continue
        steps.append(k)
        strains.append(ev.strain)
        values.append((ev.E, ev.I, ev.R))
    return (
        np.array(steps, dtype=np.int64),
        np.array(strains, dtype=np.int64),
        np.array(values, dtype=np.float64).reshape(-1, 3),
    )


def _raise_on_status(status: int, step: int) -> None:
    if status == kernels.OK:
        return
    raise IntegrationError(_FAILURES.get(status, f"integrator status {status}"), step)


def integrate(y0: np.ndarray, params: Sequence[StrainParams], u: np.ndarray,
              grid: TimeGrid, events: Sequence[SeedEvent] = ()) -> np.ndarray:
    """Array-level forward pass shared by simulate() and the sweep solver."""
    beta, sigma, gamma, delta, mu = rate_arrays(params)
    seed_step, seed_strain, seed_values = seed_arrays(events, grid, len(params))
    tol = CLAMP_REL_TOL * max(float(y0[0]), 1.0)
    Y, status, step = kernels.integrate_states(
        np.asarray(y0, dtype=np.float64), beta, sigma, gamma, delta, mu,
        activation_steps(params, grid), np.asarray(u, dtype=np.float64), float(grid.dt),
        seed_step, seed_strain, seed_values, tol,
    )
    _raise_on_status(status, step)
    return Y


def simulate(initial: EpidemicState, params: Sequence[StrainParams], schedule: ControlSchedule,
             events: Optional[List[SeedEvent]] = None, grid: Optional[TimeGrid] = None) -> Trajectory:
    grid = grid or schedule.grid
    if not grid.same_as(schedule.grid):
        raise ConfigurationError("control schedule is defined on a different grid")
    check_state(initial, params)
    Y = integrate(initial.to_vector(), params, schedule.u, grid, events or [])
    logger.debug("simulated %d steps over [%s, %s]", grid.N, grid.t0, grid.T)
    return Trajectory(grid=grid, params=tuple(params), y=Y, u=np.array(schedule.u))
