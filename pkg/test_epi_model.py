import numpy as np
import pytest

from app.core.errors import ContractViolationError, DegenerateControlError, DomainError, StateConsistencyError
from app.models.strain import EpidemicState, StrainParams
from app.services.epi_model import (
    analytic_eigenvalues,
    derivatives,
    equilibrium_residuals,
    min_stabilizing_control,
    nontrivial_equilibrium,
    reproduction_number,
    susceptible,
    susceptible_derivative,
    trivial_equilibrium,
)
from conftest import S0, random_state, random_strain


def test_infection_free_state_is_stationary(wild):
    state = EpidemicState.infection_free(1e6, 1)
    d = derivatives(state, [wild], 0.0)
    assert d.to_vector().tolist() == [0.0, 0.0, 0.0, 0.0]


def test_population_loses_only_disease_deaths(rng):
    params = [random_strain(rng) for _ in range(3)]
    state = random_state(rng, 3)
    d = derivatives(state, params, 0.4)
    expected = -sum(p.mu * i for p, i in zip(params, state.I))
    assert d.P == pytest.approx(expected, rel=1e-12)


def test_derivative_formulas_single_strain(wild):
    state = EpidemicState(P=1e6, E=(100.0,), I=(50.0,), R=(25.0,))
    u = 0.3
    S = 1e6 - 175.0
    d = derivatives(state, [wild], u)
    assert d.E[0] == pytest.approx((1 - u) * wild.beta * S * 50.0 - wild.sigma * 100.0, rel=1e-12)
    assert d.I[0] == pytest.approx(wild.sigma * 100.0 - (wild.mu + wild.gamma) * 50.0, rel=1e-12)
    assert d.R[0] == pytest.approx(wild.gamma * 50.0 - wild.delta * 25.0, rel=1e-12)


def test_susceptible_identity_on_random_states(rng):
    for trial in range(100):
        n = 1 + trial % 3
        params = [random_strain(rng) for _ in range(n)]
        state = random_state(rng, n)
        u = rng.uniform(0.0, 1.0)
        d = derivatives(state, params, u)
        for j in range(n):
            implied = d.P - d.E[j] - d.I[j] - d.R[j]
            direct = susceptible_derivative(state, params, u, j)
            scale = abs(d.P) + abs(d.E[j]) + abs(d.I[j]) + abs(d.R[j]) + params[j].beta * state.P * state.I[j]
            assert abs(implied - direct) <= 1e-12 * scale


def test_inactive_strain_only_feels_other_deaths(wild):
    late = wild.model_copy(update={"activation_time": 180.0})
    state = EpidemicState(t=10.0, P=1e6, E=(100.0, 0.0), I=(40.0, 0.0), R=(10.0, 0.0))
    d = derivatives(state, [wild, late], 0.0)
    assert (d.E[1], d.I[1], d.R[1]) == (0.0, 0.0, 0.0)
    assert susceptible_derivative(state, [wild, late], 0.0, 1) == pytest.approx(-wild.mu * 40.0, rel=1e-12)


def test_contract_violations(wild):
    negative = EpidemicState(P=100.0, E=(-1.0,), I=(0.0,), R=(0.0,))
    with pytest.raises(ContractViolationError):
        derivatives(negative, [wild], 0.0)
    ok = EpidemicState.infection_free(100.0, 1)
    with pytest.raises(DomainError):
        derivatives(ok, [wild], 1.5)
    with pytest.raises(DomainError):
        derivatives(EpidemicState.infection_free(100.0, 0), [], 0.0)
    with pytest.raises(ContractViolationError):
        derivatives(EpidemicState.infection_free(100.0, 2), [wild], 0.0)


def test_susceptible_clamps_rounding_but_not_blowups():
    tiny = EpidemicState(P=1e6, E=(5e5,), I=(5e5,), R=(1e-6,))
    assert susceptible(tiny, 0) == 0.0
    broken = EpidemicState(P=1e6, E=(6e5,), I=(5e5,), R=(0.0,))
    with pytest.raises(StateConsistencyError):
        susceptible(broken, 0)


def test_reproduction_number_experiment1(wild):
    r0 = reproduction_number([wild], S0, 0.0)
    assert r0.value == pytest.approx(10.98, abs=0.01)
    assert r0.dominant_strain == 0
    assert reproduction_number([wild], S0, 0.5).value == pytest.approx(r0.value / 2, rel=1e-12)


def test_reproduction_number_picks_most_transmissible_strain(wild):
    variant = wild.model_copy(update={"beta": 1.7 * wild.beta})
    r0 = reproduction_number([wild, variant], S0, 0.0)
    assert r0.dominant_strain == 1
    assert r0.terms[1] == pytest.approx(1.7 * r0.terms[0], rel=1e-12)


def test_full_lockdown_stops_transmission(wild, rng):
    state = EpidemicState(P=1e6, E=(100.0,), I=(50.0,), R=(25.0,))
    d = derivatives(state, [wild], 1.0)
    assert d.E[0] == -wild.sigma * 100.0
    assert reproduction_number([wild], S0, 1.0).value == 0.0

    params = [random_strain(rng) for _ in range(2)]
    eig = analytic_eigenvalues(params, 500.0, 1.0)
    roots = eig[5:].reshape(2, 2)
    for p, (plus, minus) in zip(params, roots):
        expected = sorted([-(p.mu + p.gamma), -p.sigma])
        assert sorted([plus.real, minus.real]) == pytest.approx(expected, rel=1e-12)
        assert plus.imag == 0.0 and minus.imag == 0.0


def test_min_stabilizing_control_is_the_threshold(wild):
    u_min = min_stabilizing_control([wild], S0)
    assert u_min == pytest.approx(0.9089, abs=1e-3)
    assert reproduction_number([wild], S0, u_min).value == pytest.approx(1.0, rel=1e-12)
    weak = wild.model_copy(update={"beta": 1e-12})
    assert min_stabilizing_control([weak], S0) == 0.0


def test_trivial_equilibrium_has_zero_residual(rng):
    params = [random_strain(rng) for _ in range(3)]
    point = trivial_equilibrium(params, 500.0)
    assert point.kind == "trivial" and point.feasible
    assert np.all(equilibrium_residuals(point, params, 0.2, P=500.0) == 0.0)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_nontrivial_equilibrium_is_infeasible(rng, n):
    for _ in range(10):
        params = [random_strain(rng) for _ in range(n)]
        u = rng.uniform(0.0, 0.9)
        I_ref = rng.uniform(1.0, 100.0)
        point = nontrivial_equilibrium(params, u, I_ref)
        assert point.kind == "non-trivial"
        assert point.I[0] < 0.0
        assert not point.feasible
        assert all(i == I_ref for i in point.I[1:])

        residual = equilibrium_residuals(point, params, u, P=1000.0)
        rates = max(max(p.beta * s, p.sigma, p.gamma + p.mu, p.delta) for p, s in zip(params, point.S))
        scale = rates * max(abs(v) for v in point.E + point.I + point.R)
        assert np.max(np.abs(residual)) <= 1e-9 * scale


def test_nontrivial_equilibrium_edge_cases(wild):
    second = wild.model_copy(update={"name": "second"})
    assert nontrivial_equilibrium([wild, second], 0.2, 0.0).kind == "trivial"
    with pytest.raises(DomainError):
        nontrivial_equilibrium([wild], 0.2, 1.0)
    with pytest.raises(DegenerateControlError):
        nontrivial_equilibrium([wild, second], 1.0, 1.0)
    # also a ZeroDivisionError for callers that only know the arithmetic
    with pytest.raises(ZeroDivisionError):
        nontrivial_equilibrium([wild, second], 1.0, 1.0)
    deathless = StrainParams(beta=wild.beta, sigma=wild.sigma, gamma=wild.gamma, delta=wild.delta, mu=0.0)
    with pytest.raises(DomainError):
        nontrivial_equilibrium([deathless, second], 0.2, 1.0)
