from typing import Annotated, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

# u(t): 0 = no intervention, 1 = transmission fully suppressed
ControlValue = Annotated[float, Field(ge=0.0, le=1.0)]


class StrainParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    beta: float = Field(gt=0)              # per person per day
    sigma: float = Field(gt=0)             # 1 / latency (days)
    gamma: float = Field(gt=0)             # recovery rate
    delta: float = Field(gt=0)             # immunity loss rate
    mu: float = Field(ge=0)                # disease death rate
    activation_time: float = Field(default=0.0, ge=0)
    name: Optional[str] = None


class EpidemicState(BaseModel):
    """
    Total population plus per-strain (E, I, R). S_j is never stored:
    S_j = P - E_j - I_j - R_j.
    Values are not range-checked here; operations check their own contracts.
    """
    model_config = ConfigDict(frozen=True)

    t: float = 0.0
    P: float
    E: Tuple[float, ...]
    I: Tuple[float, ...]
    R: Tuple[float, ...]

    @property
    def n_strains(self) -> int:
        return len(self.E)

    def susceptible(self) -> np.ndarray:
        return self.P - np.asarray(self.E) - np.asarray(self.I) - np.asarray(self.R)

    def to_vector(self) -> np.ndarray:
        """Flat layout shared with the kernels: [P, E_1..E_n, I_1..I_n, R_1..R_n]."""
        return np.concatenate(([self.P], self.E, self.I, self.R)).astype(np.float64)

    @classmethod
    def from_vector(cls, t: float, y: np.ndarray, n: int) -> "EpidemicState":
        y = np.asarray(y, dtype=np.float64)
        return cls(
            t=float(t),
            P=float(y[0]),
            E=tuple(float(v) for v in y[1:1 + n]),
            I=tuple(float(v) for v in y[1 + n:1 + 2 * n]),
            R=tuple(float(v) for v in y[1 + 2 * n:1 + 3 * n]),
        )

    @classmethod
    def infection_free(cls, P: float, n: int, t: float = 0.0) -> "EpidemicState":
        zeros = tuple(0.0 for _ in range(n))
        return cls(t=t, P=P, E=zeros, I=zeros, R=zeros)


class StateDerivative(BaseModel):
    model_config = ConfigDict(frozen=True)

    P: float
    E: Tuple[float, ...]
    I: Tuple[float, ...]
    R: Tuple[float, ...]

    def to_vector(self) -> np.ndarray:
        return np.concatenate(([self.P], self.E, self.I, self.R)).astype(np.float64)


class EquilibriumPoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    S: Tuple[float, ...]
    E: Tuple[float, ...]
    I: Tuple[float, ...]
    R: Tuple[float, ...]
    kind: Literal["trivial", "non-trivial"]
    feasible: bool = True


class ReproductionNumber(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float
    terms: List[float]
    dominant_strain: int
