import numpy as np
import pytest

from app.models.grid import SeedEvent, TimeGrid
from app.models.strain import EpidemicState, StrainParams

EXPERIMENT1 = dict(beta=2.41e-9, sigma=1 / 7, gamma=1 / 21, delta=1 / 90, mu=1.152e-5)
S0 = 217e6
SEED = (252.0, 2.0, 1.0)


def random_strain(rng: np.random.Generator, **overrides) -> StrainParams:
    values = dict(
        beta=rng.uniform(1e-5, 1e-3),
        sigma=rng.uniform(0.05, 0.5),
        gamma=rng.uniform(0.02, 0.3),
        delta=rng.uniform(0.005, 0.1),
        mu=rng.uniform(1e-5, 1e-2),
    )
    values.update(overrides)
    return StrainParams(**values)


def random_state(rng: np.random.Generator, n: int, P: float = 1000.0, t: float = 0.0) -> EpidemicState:
    # keeps every S_j strictly positive
    parts = rng.uniform(0.0, P / 4.0, size=(3, n))
    return EpidemicState(t=t, P=P, E=tuple(parts[0]), I=tuple(parts[1]), R=tuple(parts[2]))


@pytest.fixture
def rng():
    return np.random.default_rng(20210219)


@pytest.fixture
def wild():
    return StrainParams(name="wild", **EXPERIMENT1)


@pytest.fixture
def experiment1_initial():
    E, I, R = SEED
    return EpidemicState(t=0.0, P=S0 + E + I + R, E=(E,), I=(I,), R=(R,))


@pytest.fixture
def two_year_grid():
    return TimeGrid.build(horizon=730.0, dt=0.05)


@pytest.fixture
def small_problem():
    """A town of 1000 with R0 = 3, used where a full-size run would be slow."""
    params = [StrainParams(beta=3.3e-4, sigma=0.2, gamma=0.1, delta=0.02, mu=0.01)]
    initial = EpidemicState(t=0.0, P=1000.0, E=(10.0,), I=(5.0,), R=(0.0,))
    grid = TimeGrid.build(horizon=100.0, dt=0.1)
    return params, initial, grid


def two_strain_setup(beta_factor: float = 1.0, seed_day: float = 180.0):
    """Experiment-1 strain plus a copy (beta scaled) seeded on seed_day."""
    first = StrainParams(name="first", **EXPERIMENT1)
    second = StrainParams(name="second", activation_time=seed_day,
                          **{**EXPERIMENT1, "beta": EXPERIMENT1["beta"] * beta_factor})
    E, I, R = SEED
    initial = EpidemicState(P=S0 + E + I + R, E=(E, 0.0), I=(I, 0.0), R=(R, 0.0))
    events = [SeedEvent(time=seed_day, strain=1, E=E, I=I, R=R)]
    return [first, second], initial, events
