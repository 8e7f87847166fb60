import math
from fractions import Fraction
from typing import Annotated, List, Literal, Optional, Union

from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, model_validator

from app.core.config import DEFAULT_DT, DEFAULT_WINDOW, FBSM_MAX_ITER, FBSM_RELAXATION, FBSM_TOL
from app.core.errors import ConfigurationError
from app.models.control import CostParams
from app.models.grid import SeedEvent, TimeGrid
from app.models.strain import ControlValue, EpidemicState, StrainParams


def _parse_rate(v):
    # "1/7" is easier to audit in a config file than 0.14285714285714285
    if isinstance(v, str):
        try:
            return float(Fraction(v.replace(" ", "")))
        except (ValueError, ZeroDivisionError):
            raise ValueError(f"not a number or fraction: {v!r}")
    return v


Rate = Annotated[float, BeforeValidator(_parse_rate)]


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class Compartments(_Section):
    E: float = Field(default=0.0, ge=0)
    I: float = Field(default=0.0, ge=0)
    R: float = Field(default=0.0, ge=0)


class SeedSpec(_Section):
    # mirrors the first strain's initial condition unless configured
    E: float = Field(default=252.0, ge=0)
    I: float = Field(default=2.0, ge=0)
    R: float = Field(default=1.0, ge=0)


class StrainConfig(_Section):
    name: Optional[str] = None
    beta: Rate = Field(gt=0)
    beta_factor: float = Field(default=1.0, gt=0)
    sigma: Rate = Field(gt=0)
    gamma: Rate = Field(gt=0)
    delta: Rate = Field(gt=0)
    mu: Rate = Field(ge=0)
    activation_time: float = Field(default=0.0, ge=0)
    initial: Compartments = Compartments()
    seed: SeedSpec = SeedSpec()

    def to_params(self) -> StrainParams:
        return StrainParams(
            beta=self.beta * self.beta_factor,
            sigma=self.sigma,
            gamma=self.gamma,
            delta=self.delta,
            mu=self.mu,
            activation_time=self.activation_time,
            name=self.name,
        )


class PopulationConfig(_Section):
    total: Optional[float] = Field(default=None, gt=0)
    # S(0) of the first strain; P(0) then adds that strain's E, I, R
    susceptible: Optional[float] = Field(default=None, gt=0)

    @model_validator(mode="after")
    def _exactly_one(self):
        if (self.total is None) == (self.susceptible is None):
            raise ValueError("give exactly one of population.total or population.susceptible")
        return self


class GridConfig(_Section):
    t0: float = 0.0
    horizon: float = Field(default=730.0, ge=0)
    dt: float = Field(default=DEFAULT_DT, gt=0)


class NoControl(_Section):
    mode: Literal["none"] = "none"


class ConstantControl(_Section):
    mode: Literal["constant"]
    u: ControlValue


class ScheduleControl(_Section):
    mode: Literal["schedule"]
    file: str


class OptimizeControl(_Section):
    mode: Literal["optimize"]
    c1: float = Field(default=1.0, gt=0)
    c2: Optional[float] = Field(default=None, gt=0)
    # c2 = c2_log_factor * ln(P(0)) or ln(S(0)), see c2_log_of
    c2_log_factor: Optional[float] = Field(default=None, gt=0)
    c2_log_of: Literal["population", "susceptible"] = "population"
    relaxation: float = Field(default=FBSM_RELAXATION, gt=0, le=1)
    tol: float = Field(default=FBSM_TOL, gt=0)
    max_iter: int = Field(default=FBSM_MAX_ITER, ge=1)
    u_init: ControlValue = 0.0
    cache: bool = False

    @model_validator(mode="after")
    def _one_c2(self):
        if (self.c2 is None) == (self.c2_log_factor is None):
            raise ValueError("give exactly one of control.c2 or control.c2_log_factor")
        return self


ControlConfig = Annotated[
    Union[NoControl, ConstantControl, ScheduleControl, OptimizeControl],
    Field(discriminator="mode"),
]


class AnalysisConfig(_Section):
    window: float = Field(default=DEFAULT_WINDOW, gt=0)


class OutputConfig(_Section):
    dir: Optional[str] = None
    svg: bool = True


class ScenarioConfig(_Section):
    name: str
    description: Optional[str] = None
    population: PopulationConfig
    strains: List[StrainConfig] = Field(min_length=1)
    grid: GridConfig = GridConfig()
    control: ControlConfig = NoControl()
    analysis: AnalysisConfig = AnalysisConfig()
    output: OutputConfig = OutputConfig()

    @model_validator(mode="after")
    def _consistent(self):
        grid = self.time_grid()
        for j, s in enumerate(self.strains):
            if s.activation_time > grid.t0:
                try:
                    grid.step_of(s.activation_time)
                except ConfigurationError:
                    raise ConfigurationError(
                        f"strains.{j}.activation_time={s.activation_time} is not a multiple of grid.dt={grid.dt}"
                    )
        if self.strains[0].activation_time > grid.t0:
            raise ConfigurationError("strains.0 must be active at t0")
        P0 = self.initial_population()
        for j, s in enumerate(self.strains):
            if s.initial.E + s.initial.I + s.initial.R > P0:
                raise ConfigurationError(f"strains.{j}.initial exceeds the initial population {P0}")
        if self.analysis.window > grid.T - grid.t0 and grid.N > 0:
            raise ConfigurationError(f"analysis.window={self.analysis.window} exceeds the horizon")
        return self

    # ---- derived views ----

    def params(self) -> List[StrainParams]:
        return [s.to_params() for s in self.strains]

    def time_grid(self) -> TimeGrid:
        return TimeGrid.build(horizon=self.grid.t0 + self.grid.horizon, dt=self.grid.dt, t0=self.grid.t0)

    def initial_population(self) -> float:
        if self.population.total is not None:
            return self.population.total
        first = self.strains[0].initial
        return self.population.susceptible + first.E + first.I + first.R

    def initial_state(self) -> EpidemicState:
        t0 = self.grid.t0
        active = [s.activation_time <= t0 for s in self.strains]
        return EpidemicState(
            t=t0,
            P=self.initial_population(),
            E=tuple(s.initial.E if a else 0.0 for s, a in zip(self.strains, active)),
            I=tuple(s.initial.I if a else 0.0 for s, a in zip(self.strains, active)),
            R=tuple(s.initial.R if a else 0.0 for s, a in zip(self.strains, active)),
        )

    def seed_events(self) -> List[SeedEvent]:
        events = [
            SeedEvent(time=s.activation_time, strain=j, E=s.seed.E, I=s.seed.I, R=s.seed.R)
            for j, s in enumerate(self.strains)
            if s.activation_time > self.grid.t0
        ]
        return sorted(events, key=lambda e: (e.time, e.strain))

    def costs(self) -> CostParams:
        control = self.control
        if not isinstance(control, OptimizeControl):
            raise ConfigurationError(f"control.mode={control.mode} has no cost parameters")
        if control.c2 is not None:
            return CostParams(c1=control.c1, c2=control.c2)
        if control.c2_log_of == "population":
            base = self.initial_population()
        else:
            base = self.population.susceptible or (self.initial_population() - self._first_infected())
        return CostParams(c1=control.c1, c2=control.c2_log_factor * math.log(base))

    def _first_infected(self) -> float:
        first = self.strains[0].initial
        return first.E + first.I + first.R
