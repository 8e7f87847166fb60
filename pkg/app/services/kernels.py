"""
Compiled inner loops for the multi-strain system.

Layouts (n strains):
  state    y   = [P, E_1..E_n, I_1..I_n, R_1..R_n]            (3n+1)
  full     z   = [P, S_1..S_n, E_1..E_n, I_1..I_n, R_1..R_n]  (4n+1)
  costate  phi = [phi_P, phi_S(n), phi_E(n), phi_I(n), phi_R(n)]

`mask[j]` is 1.0 for an active strain and 0.0 before its activation step.
Status codes returned by the integrators:
  0 ok, 1 non-finite value, 2 negative compartment, 3 negative susceptible,
  4 seed larger than the population.
"""
import numpy as np
from numba import njit

OK = 0
NON_FINITE = 1
NEGATIVE_COMPARTMENT = 2
NEGATIVE_SUSCEPTIBLE = 3
SEED_TOO_LARGE = 4


@njit(cache=True)
def fill_mask(mask, activation_step, k):
    for j in range(mask.shape[0]):
        mask[j] = 1.0 if k >= activation_step[j] else 0.0


@njit(cache=True)
def state_rhs(y, beta, sigma, gamma, delta, mu, mask, u):
    n = beta.shape[0]
    out = np.zeros(3 * n + 1)
    P = y[0]
    for j in range(n):
        if mask[j] == 0.0:
            continue
        E = y[1 + j]
        I = y[1 + n + j]
        R = y[1 + 2 * n + j]
        S = P - E - I - R
        out[0] -= mu[j] * I
        out[1 + j] = (1.0 - u) * beta[j] * S * I - sigma[j] * E
        out[1 + n + j] = sigma[j] * E - (mu[j] + gamma[j]) * I
        out[1 + 2 * n + j] = gamma[j] * I - delta[j] * R
    return out


@njit(cache=True)
def full_rhs(z, beta, sigma, gamma, delta, mu, mask, u):
    n = beta.shape[0]
    out = np.zeros(4 * n + 1)
    deaths = 0.0
    for i in range(n):
        deaths += mask[i] * mu[i] * z[1 + 2 * n + i]
    out[0] = -deaths
    for j in range(n):
        S = z[1 + j]
        E = z[1 + n + j]
        I = z[1 + 2 * n + j]
        R = z[1 + 3 * n + j]
        others = deaths - mask[j] * mu[j] * I
        m = mask[j]
        infection = (1.0 - u) * beta[j] * S * I
        out[1 + j] = m * (-infection + delta[j] * R) - others
        out[1 + n + j] = m * (infection - sigma[j] * E)
        out[1 + 2 * n + j] = m * (sigma[j] * E - (mu[j] + gamma[j]) * I)
        out[1 + 3 * n + j] = m * (gamma[j] * I - delta[j] * R)
    return out


@njit(cache=True)
def costate_rhs(y, phi, beta, sigma, gamma, delta, mu, mask, u, c1):
    n = beta.shape[0]
    out = np.zeros(4 * n + 1)
    out[0] = -c1
    P = y[0]
    phi_P = phi[0]
    total_phi_S = 0.0
    for j in range(n):
        total_phi_S += phi[1 + j]
    for j in range(n):
        if mask[j] == 0.0:
            continue
        E = y[1 + j]
        I = y[1 + n + j]
        R = y[1 + 2 * n + j]
        S = P - E - I - R
        pS = phi[1 + j]
        pE = phi[1 + n + j]
        pI = phi[1 + 2 * n + j]
        pR = phi[1 + 3 * n + j]
        gap = (pS - pE) * (1.0 - u) * beta[j]
        out[1 + j] = gap * I
        out[1 + n + j] = sigma[j] * (pE - pI)
        out[1 + 2 * n + j] = (
            gap * S
            + pI * (mu[j] + gamma[j])
            - pR * gamma[j]
            + phi_P * mu[j]
            + mu[j] * (total_phi_S - pS)
        )
        out[1 + 3 * n + j] = delta[j] * (pR - pS)
    return out


@njit(cache=True)
def rk4_state_step(y, beta, sigma, gamma, delta, mu, mask, u_now, u_mid, u_next, dt):
    k1 = state_rhs(y, beta, sigma, gamma, delta, mu, mask, u_now)
    k2 = state_rhs(y + 0.5 * dt * k1, beta, sigma, gamma, delta, mu, mask, u_mid)
    k3 = state_rhs(y + 0.5 * dt * k2, beta, sigma, gamma, delta, mu, mask, u_mid)
    k4 = state_rhs(y + dt * k3, beta, sigma, gamma, delta, mu, mask, u_next)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@njit(cache=True)
def clamp_state(y, n, tol):
    """Zero small negative overshoots in place; report anything worse."""
    for i in range(y.shape[0]):
        if not np.isfinite(y[i]):
            return NON_FINITE
        if y[i] < 0.0:
            if y[i] >= -tol:
                y[i] = 0.0
            else:
                return NEGATIVE_COMPARTMENT
    for j in range(n):
        S = y[0] - y[1 + j] - y[1 + n + j] - y[1 + 2 * n + j]
        if S < -tol:
            return NEGATIVE_SUSCEPTIBLE
    return OK


@njit(cache=True)
def integrate_states(y0, beta, sigma, gamma, delta, mu, activation_step, u, dt,
                     seed_step, seed_strain, seed_values, tol):
    n_points = u.shape[0]
    n = beta.shape[0]
    Y = np.zeros((n_points, y0.shape[0]))
    y = y0.copy()
    mask = np.zeros(n)
    ev = 0
    n_events = seed_step.shape[0]
    for k in range(n_points):
        while ev < n_events and seed_step[ev] == k:
            j = seed_strain[ev]
            y[1 + j] += seed_values[ev, 0]
            y[1 + n + j] += seed_values[ev, 1]
            y[1 + 2 * n + j] += seed_values[ev, 2]
            if y[1 + j] + y[1 + n + j] + y[1 + 2 * n + j] > y[0] + tol:
                return Y, SEED_TOO_LARGE, k
            ev += 1
        Y[k, :] = y
        if k == n_points - 1:
            break
        fill_mask(mask, activation_step, k)
        u_mid = 0.5 * (u[k] + u[k + 1])
        y = rk4_state_step(y, beta, sigma, gamma, delta, mu, mask, u[k], u_mid, u[k + 1], dt)
        status = clamp_state(y, n, tol)
        if status != OK:
            return Y, status, k + 1
    return Y, OK, -1


@njit(cache=True)
def integrate_costates(Y, u, beta, sigma, gamma, delta, mu, activation_step, dt, c1):
    """Backward RK4 from phi(T) = 0 on the forward grid."""
    n_points = Y.shape[0]
    n = beta.shape[0]
    Phi = np.zeros((n_points, 4 * n + 1))
    phi = np.zeros(4 * n + 1)
    mask = np.zeros(n)
    for k in range(n_points - 2, -1, -1):
        fill_mask(mask, activation_step, k)
        y_next = Y[k + 1]
        y_now = Y[k]
        y_mid = 0.5 * (y_now + y_next)
        u_mid = 0.5 * (u[k] + u[k + 1])
        k1 = costate_rhs(y_next, phi, beta, sigma, gamma, delta, mu, mask, u[k + 1], c1)
        k2 = costate_rhs(y_mid, phi - 0.5 * dt * k1, beta, sigma, gamma, delta, mu, mask, u_mid, c1)
        k3 = costate_rhs(y_mid, phi - 0.5 * dt * k2, beta, sigma, gamma, delta, mu, mask, u_mid, c1)
        k4 = costate_rhs(y_now, phi - dt * k3, beta, sigma, gamma, delta, mu, mask, u[k], c1)
        phi = phi - (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        for i in range(phi.shape[0]):
            if not np.isfinite(phi[i]):
                return Phi, NON_FINITE, k
        Phi[k, :] = phi
    return Phi, OK, -1


@njit(cache=True)
def switching_values(Y, Phi, beta, activation_step):
    """sum_j S_j I_j beta_j (phi_S_j - phi_E_j) at every grid point."""
    n_points = Y.shape[0]
    n = beta.shape[0]
    out = np.zeros(n_points)
    for k in range(n_points):
        P = Y[k, 0]
        total = 0.0
        for j in range(n):
            if k < activation_step[j]:
                continue
            E = Y[k, 1 + j]
            I = Y[k, 1 + n + j]
            R = Y[k, 1 + 2 * n + j]
            S = P - E - I - R
            total += S * I * beta[j] * (Phi[k, 1 + j] - Phi[k, 1 + n + j])
        out[k] = total
    return out
