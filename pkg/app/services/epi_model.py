"""
Multi-strain SEIR dynamics with waning immunity: right-hand sides, the
reproduction number, equilibria and the closed-form spectrum at the
infection-free point.
"""
import logging
from typing import List, Sequence, Tuple, Union

import numpy as np

from app.core.config import CLAMP_REL_TOL
from app.core.errors import (
    ContractViolationError,
    DegenerateControlError,
    DomainError,
    StateConsistencyError,
)
from app.models.strain import (
    EpidemicState,
    EquilibriumPoint,
    ReproductionNumber,
    StateDerivative,
    StrainParams,
)
from app.services import kernels

logger = logging.getLogger(__name__)


# ---- helpers shared with the other services ----

def rate_arrays(params: Sequence[StrainParams]) -> Tuple[np.ndarray, ...]:
    """(beta, sigma, gamma, delta, mu) as float arrays, in strain order."""
    if len(params) == 0:
        raise DomainError("at least one strain is required")
    return tuple(
        np.array([getattr(p, name) for p in params], dtype=np.float64)
        for name in ("beta", "sigma", "gamma", "delta", "mu")
    )


def active_mask(params: Sequence[StrainParams], t: float) -> np.ndarray:
    return np.array([1.0 if t >= p.activation_time else 0.0 for p in params])


def check_control(u: float) -> float:
    u = float(u)
    if not (0.0 <= u <= 1.0):
        raise DomainError(f"control u={u} is outside [0, 1]")
    return u


def check_state(state: EpidemicState, params: Sequence[StrainParams]) -> None:
    n = len(params)
    if state.n_strains != n or len(state.I) != n or len(state.R) != n:
        raise ContractViolationError(f"state has {state.n_strains} strains, parameters have {n}")
    y = state.to_vector()
    if not np.all(np.isfinite(y)):
        raise ContractViolationError("state contains non-finite values")
    if np.any(y < 0.0):
        raise ContractViolationError(f"negative compartment in state at t={state.t}")


def validate_strict(params: Sequence[StrainParams]) -> None:
    """The equilibrium formulas divide by mu; exploratory runs may keep mu = 0."""
    for j, p in enumerate(params):
        if p.mu <= 0.0:
            raise DomainError(f"strain {j} has mu={p.mu}; strictly positive death rates are required")


# ---- dynamics ----

def susceptible(state: EpidemicState, j: int) -> float:
    S = state.P - state.E[j] - state.I[j] - state.R[j]
    if S < 0.0:
        if S < -CLAMP_REL_TOL * max(state.P, 1.0):
            raise StateConsistencyError(f"S_{j} = {S} < 0 at t={state.t}; integration blew up")
        return 0.0
    return S


def derivatives(state: EpidemicState, params: Sequence[StrainParams], u: float) -> StateDerivative:
    check_state(state, params)
    u = check_control(u)
    beta, sigma, gamma, delta, mu = rate_arrays(params)
    mask = active_mask(params, state.t)
    dy = kernels.state_rhs(state.to_vector(), beta, sigma, gamma, delta, mu, mask, u)
    n = len(params)
    return StateDerivative(
        P=float(dy[0]),
        E=tuple(float(v) for v in dy[1:1 + n]),
        I=tuple(float(v) for v in dy[1 + n:1 + 2 * n]),
        R=tuple(float(v) for v in dy[1 + 2 * n:]),
    )


def full_system_derivatives(z: np.ndarray, params: Sequence[StrainParams], u: float, t: float = np.inf) -> np.ndarray:
    """
    Right-hand side of the (4n+1)-dimensional system where every S_j is its own
    coordinate: z = [P, S_1..S_n, E_1..E_n, I_1..I_n, R_1..R_n].
    The default t treats every strain as active.
    """
    beta, sigma, gamma, delta, mu = rate_arrays(params)
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (4 * len(params) + 1,):
        raise ContractViolationError(f"expected {4 * len(params) + 1} coordinates, got {z.shape}")
    return kernels.full_rhs(z, beta, sigma, gamma, delta, mu, active_mask(params, t), float(u))


def full_coordinates(state: EpidemicState) -> np.ndarray:
    return np.concatenate(([state.P], state.susceptible(), state.E, state.I, state.R)).astype(np.float64)


def susceptible_derivative(state: EpidemicState, params: Sequence[StrainParams], u: float, j: int) -> float:
    check_state(state, params)
    u = check_control(u)
    dz = full_system_derivatives(full_coordinates(state), params, u, state.t)
    return float(dz[1 + j])


# ---- reproduction number and stability threshold ----

def reproduction_number(params: Sequence[StrainParams], S_bar: Union[float, Sequence[float]], u: float) -> ReproductionNumber:
    beta, sigma, gamma, delta, mu = rate_arrays(params)
    u = check_control(u)
    S_bar = np.broadcast_to(np.asarray(S_bar, dtype=np.float64), beta.shape)
    if np.any(S_bar < 0):
        raise DomainError("S_bar must be non-negative")
    terms = (1.0 - u) * beta * S_bar / (mu + gamma)
    dominant = int(np.argmax(terms))
    return ReproductionNumber(value=float(terms[dominant]), terms=terms.tolist(), dominant_strain=dominant)


def min_stabilizing_control(params: Sequence[StrainParams], S_bar: Union[float, Sequence[float]]) -> float:
    """Smallest constant u for which R0 < 1 holds for every u above it."""
    beta, sigma, gamma, delta, mu = rate_arrays(params)
    S_bar = np.broadcast_to(np.asarray(S_bar, dtype=np.float64), beta.shape)
    if np.any(S_bar <= 0):
        raise DomainError("S_bar must be positive")
    # only the most transmissible strain binds
    return float(max(0.0, 1.0 - np.min((mu + gamma) / (beta * S_bar))))


# ---- equilibria ----

def trivial_equilibrium(params: Sequence[StrainParams], S_bar: Union[float, Sequence[float]]) -> EquilibriumPoint:
    n = len(params)
    S_bar = np.broadcast_to(np.asarray(S_bar, dtype=np.float64), (n,))
    zeros = tuple(0.0 for _ in range(n))
    return EquilibriumPoint(S=tuple(float(s) for s in S_bar), E=zeros, I=zeros, R=zeros, kind="trivial")


def nontrivial_equilibrium(params: Sequence[StrainParams], u: float, I_bar_ref: float) -> EquilibriumPoint:
    """
    Closed-form endemic point for n >= 2 strains. Strains 2..n carry
    I = I_bar_ref; strain 1 balances the death flux, I_1 = -sum(mu_i I_i) / mu_1,
    so the point is infeasible for any I_bar_ref > 0.
    """
    n = len(params)
    if n < 2:
        raise DomainError("the non-trivial equilibrium needs at least two strains")
    validate_strict(params)
    u = check_control(u)
    if u >= 1.0:
        raise DegenerateControlError("u = 1 makes S_bar = (mu + gamma) / ((1 - u) beta) undefined")
    beta, sigma, gamma, delta, mu = rate_arrays(params)

    S_bar = (mu + gamma) / ((1.0 - u) * beta)
    I_bar = np.full(n, float(I_bar_ref))
    I_bar[0] = -np.dot(mu[1:], I_bar[1:]) / mu[0]
    E_bar = (mu + gamma) * I_bar / sigma
    R_bar = gamma * I_bar / delta

    if I_bar_ref == 0.0:
        return trivial_equilibrium(params, S_bar)

    feasible = bool(np.all(I_bar >= 0) and np.all(E_bar >= 0) and np.all(R_bar >= 0))
    if not feasible:
        logger.debug("non-trivial equilibrium is infeasible: I_bar=%s", I_bar)
    return EquilibriumPoint(
        S=tuple(S_bar.tolist()),
        E=tuple(E_bar.tolist()),
        I=tuple(I_bar.tolist()),
        R=tuple(R_bar.tolist()),
        kind="non-trivial",
        feasible=feasible,
    )


def equilibrium_residuals(point: EquilibriumPoint, params: Sequence[StrainParams], u: float, P: float = 0.0) -> np.ndarray:
    """The differential system evaluated at the point; zero at an equilibrium for any P."""
    z = np.concatenate(([P], point.S, point.E, point.I, point.R))
    return full_system_derivatives(z, params, u)


def analytic_eigenvalues(params: Sequence[StrainParams], S_bar: Union[float, Sequence[float]], u: float) -> np.ndarray:
    """
    Spectrum of the Jacobian at the infection-free point, ordered as
    n+1 zeros, then -delta_j, then (+root, -root) per strain.
    """
    beta, sigma, gamma, delta, mu = rate_arrays(params)
    u = check_control(u)
    n = len(params)
    S_bar = np.broadcast_to(np.asarray(S_bar, dtype=np.float64), (n,))
    a = mu + gamma
    disc = np.sqrt((4.0 * (1.0 - u) * beta * sigma * S_bar + (a - sigma) ** 2).astype(np.complex128))
    roots: List[complex] = []
    for j in range(n):
        roots.append(-0.5 * (a[j] + sigma[j]) + 0.5 * disc[j])
        roots.append(-0.5 * (a[j] + sigma[j]) - 0.5 * disc[j])
    return np.concatenate((np.zeros(n + 1), -delta, np.array(roots))).astype(np.complex128)
