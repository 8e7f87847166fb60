from typing import List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.core.errors import ConfigurationError, DomainError
from app.models.strain import EpidemicState, StrainParams


class TimeGrid(BaseModel):
    model_config = ConfigDict(frozen=True)

    t0: float = 0.0
    T: float
    dt: float = Field(gt=0)
    N: int = Field(ge=0)

    @classmethod
    def build(cls, horizon: float, dt: float, t0: float = 0.0) -> "TimeGrid":
        """Snap the horizon onto the grid so that N * dt == T - t0."""
        if dt <= 0:
            raise ConfigurationError(f"dt must be positive, got {dt}")
        if horizon < t0:
            raise ConfigurationError(f"horizon {horizon} is before t0 {t0}")
        n_steps = int(round((horizon - t0) / dt))
        return cls(t0=t0, T=t0 + n_steps * dt, dt=dt, N=n_steps)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.N + 1)

    def step_of(self, t: float) -> int:
        """Grid index of time t (may lie past the horizon); off-grid times are a config error."""
        k = int(round((t - self.t0) / self.dt))
        if abs(self.t0 + k * self.dt - t) > 1e-9 * max(1.0, abs(t)):
            raise ConfigurationError(f"time {t} is not on the grid (t0={self.t0}, dt={self.dt})")
        return max(k, 0)

    def index_of(self, t: float) -> int:
        k = self.step_of(t)
        if k > self.N:
            raise ConfigurationError(f"time {t} is past the horizon {self.T}")
        return k

    def same_as(self, other: "TimeGrid") -> bool:
        return self.N == other.N and np.isclose(self.t0, other.t0) and np.isclose(self.dt, other.dt)


class SeedEvent(BaseModel):
    """Individuals moved from a strain's susceptible pool into its E/I/R at a grid time."""
    model_config = ConfigDict(frozen=True)

    time: float = Field(ge=0)
    strain: int = Field(ge=0)
    E: float = Field(default=0.0, ge=0)
    I: float = Field(default=0.0, ge=0)
    R: float = Field(default=0.0, ge=0)


class ControlSchedule(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: TimeGrid
    u: np.ndarray

    @field_validator("u", mode="before")
    @classmethod
    def _as_array(cls, v):
        arr = np.array(v, dtype=np.float64).reshape(-1)
        arr.setflags(write=False)
        return arr

    @model_validator(mode="after")
    def _check(self):
        if self.u.shape[0] != self.grid.N + 1:
            raise ConfigurationError(
                f"schedule has {self.u.shape[0]} values, grid needs {self.grid.N + 1}"
            )
        if not np.all(np.isfinite(self.u)) or np.any(self.u < 0.0) or np.any(self.u > 1.0):
            raise DomainError("control values must lie in [0, 1]")
        return self

    @classmethod
    def constant(cls, grid: TimeGrid, value: float) -> "ControlSchedule":
        return cls(grid=grid, u=np.full(grid.N + 1, float(value)))


class Trajectory(BaseModel):
    """
    Recorded run on a TimeGrid. `y` rows use the kernel layout
    [P, E_1..E_n, I_1..I_n, R_1..R_n]; `u` is the control at each grid point.
    """
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: TimeGrid
    params: Tuple[StrainParams, ...]
    y: np.ndarray
    u: np.ndarray

    @model_validator(mode="after")
    def _check(self):
        n = len(self.params)
        if self.y.shape != (self.grid.N + 1, 3 * n + 1):
            raise ConfigurationError(f"trajectory shape {self.y.shape} does not match grid/strains")
        if self.u.shape != (self.grid.N + 1,):
            raise ConfigurationError("control samples do not match the grid")
        self.y.setflags(write=False)
        self.u.setflags(write=False)
        return self

    @property
    def n_strains(self) -> int:
        return len(self.params)

    @property
    def t(self) -> np.ndarray:
        return self.grid.times

    @property
    def P(self) -> np.ndarray:
        return self.y[:, 0]

    @property
    def E(self) -> np.ndarray:
        n = self.n_strains
        return self.y[:, 1:1 + n]

    @property
    def I(self) -> np.ndarray:
        n = self.n_strains
        return self.y[:, 1 + n:1 + 2 * n]

    @property
    def R(self) -> np.ndarray:
        n = self.n_strains
        return self.y[:, 1 + 2 * n:1 + 3 * n]

    @property
    def S(self) -> np.ndarray:
        return self.P[:, None] - self.E - self.I - self.R

    @property
    def schedule(self) -> ControlSchedule:
        return ControlSchedule(grid=self.grid, u=self.u)

    def state_at(self, k: int) -> EpidemicState:
        return EpidemicState.from_vector(self.grid.t0 + k * self.grid.dt, self.y[k], self.n_strains)

    @property
    def states(self) -> List[EpidemicState]:
        return [self.state_at(k) for k in range(self.grid.N + 1)]
