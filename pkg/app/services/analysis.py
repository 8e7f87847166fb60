import logging
from typing import Dict, Sequence, Union

import numpy as np
from scipy.integrate import trapezoid

from app.core.config import DEFAULT_WINDOW, PLATEAU_THRESHOLD
from app.core.errors import DomainError
from app.models.grid import Trajectory
from app.models.strain import EpidemicState, StrainParams
from app.models.summary import StabilityReport, StrainSummary, TrajectorySummary
from app.services.epi_model import (
    check_control,
    full_coordinates,
    full_system_derivatives,
    reproduction_number,
)

logger = logging.getLogger(__name__)

COMPARTMENTS = ("S", "E", "I", "R")


def numeric_jacobian(state: EpidemicState, params: Sequence[StrainParams], u: float, h: float = 1e-4) -> np.ndarray:
    """
    Central-difference Jacobian of the differential system in the coordinates
    [P, S_1..S_n, E_1..E_n, I_1..I_n, R_1..R_n]; the step is h relative to
    each coordinate (absolute h for zero coordinates).
    """
    if h <= 0:
        raise DomainError("perturbation h must be positive")
    u = check_control(u)
    z0 = full_coordinates(state)
    dim = z0.shape[0]
    J = np.zeros((dim, dim))
    for i in range(dim):
        step = h * max(abs(z0[i]), 1.0)
        zp = z0.copy()
        zm = z0.copy()
        zp[i] += step
        zm[i] -= step
        J[:, i] = (full_system_derivatives(zp, params, u, state.t) - full_system_derivatives(zm, params, u, state.t)) / (2.0 * step)
    return J


def classify_stability(params: Sequence[StrainParams], S_bar: Union[float, Sequence[float]], u: float) -> StabilityReport:
    r0 = reproduction_number(params, S_bar, u)
    return StabilityReport(
        stable=r0.value < 1.0,
        r0=r0.value,
        binding_strain=r0.dominant_strain,
        terms=r0.terms,
    )


def quasi_endemic_shares(strain: StrainParams, u: float = 0.0, P: float = 1.0) -> Dict[str, float]:
    """
    Shares of P at which a single strain settles when deaths are too slow to
    move P: S = (mu+gamma)/((1-u) beta), E/I = (mu+gamma)/sigma, R/I = gamma/delta.
    """
    u = check_control(u)
    a = strain.mu + strain.gamma
    if u >= 1.0:
        return {"S": 1.0, "E": 0.0, "I": 0.0, "R": 0.0}
    S = a / ((1.0 - u) * strain.beta)
    if S >= P:
        return {"S": 1.0, "E": 0.0, "I": 0.0, "R": 0.0}
    I = (P - S) / (1.0 + a / strain.sigma + strain.gamma / strain.delta)
    return {
        "S": S / P,
        "E": a / strain.sigma * I / P,
        "I": I / P,
        "R": strain.gamma / strain.delta * I / P,
    }


def summarize(traj: Trajectory, window: float = DEFAULT_WINDOW) -> TrajectorySummary:
    grid = traj.grid
    if window <= 0:
        raise DomainError("summary window must be positive")
    horizon = grid.T - grid.t0
    if grid.N == 0:
        # a lone initial point is its own window
        window = horizon
    elif window > horizon + 1e-9:
        raise DomainError(f"window {window} is longer than the horizon {horizon}")

    t = traj.t
    P0 = float(traj.P[0])
    scale = P0 if P0 > 0 else 1.0
    in_window = t >= grid.T - window - 1e-9
    shares = {"S": traj.S / scale, "E": traj.E / scale, "I": traj.I / scale, "R": traj.R / scale}
    I = traj.I

    strains = []
    for j, p in enumerate(traj.params):
        k_peak = int(np.argmax(I[:, j]))
        plateau = {}
        flags = {}
        for comp in COMPARTMENTS:
            w = shares[comp][in_window, j]
            plateau[comp] = float(np.clip(np.mean(w), 0.0, 1.0))
            flags[comp] = bool(np.max(w) - np.min(w) < PLATEAU_THRESHOLD)
        deaths = float(trapezoid(p.mu * I[:, j], dx=grid.dt)) if grid.N > 0 else 0.0
        strains.append(StrainSummary(
            strain=j,
            name=p.name,
            peak_infected=float(I[k_peak, j]),
            peak_day=float(t[k_peak]),
            dominant_at_peak=int(np.argmax(I[k_peak])),
            plateau=plateau,
            plateau_flags=flags,
            deaths=deaths,
        ))

    return TrajectorySummary(
        window=float(window),
        initial_population=P0,
        final_population=float(traj.P[-1]),
        cumulative_deaths=P0 - float(traj.P[-1]),
        strains=strains,
    )
