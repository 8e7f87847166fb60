from typing import Any, Dict, List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from app.models.grid import ControlSchedule, Trajectory


class CostParams(BaseModel):
    """Running cost c1 * P - exp(c2 * u)."""
    model_config = ConfigDict(frozen=True)

    c1: float = Field(gt=0)
    c2: float = Field(gt=0)


class CostateState(BaseModel):
    model_config = ConfigDict(frozen=True)

    t: float = 0.0
    phi_P: float
    phi_S: Tuple[float, ...]
    phi_E: Tuple[float, ...]
    phi_I: Tuple[float, ...]
    phi_R: Tuple[float, ...]

    @property
    def n_strains(self) -> int:
        return len(self.phi_S)

    def to_vector(self) -> np.ndarray:
        """Layout: [phi_P, phi_S(n), phi_E(n), phi_I(n), phi_R(n)]."""
        return np.concatenate(
            ([self.phi_P], self.phi_S, self.phi_E, self.phi_I, self.phi_R)
        ).astype(np.float64)

    @classmethod
    def from_vector(cls, t: float, phi: np.ndarray, n: int) -> "CostateState":
        phi = np.asarray(phi, dtype=np.float64)
        return cls(
            t=float(t),
            phi_P=float(phi[0]),
            phi_S=tuple(float(v) for v in phi[1:1 + n]),
            phi_E=tuple(float(v) for v in phi[1 + n:1 + 2 * n]),
            phi_I=tuple(float(v) for v in phi[1 + 2 * n:1 + 3 * n]),
            phi_R=tuple(float(v) for v in phi[1 + 3 * n:1 + 4 * n]),
        )

    @classmethod
    def terminal(cls, n: int, t: float = 0.0) -> "CostateState":
        zeros = tuple(0.0 for _ in range(n))
        return cls(t=t, phi_P=0.0, phi_S=zeros, phi_E=zeros, phi_I=zeros, phi_R=zeros)


class FbsmReport(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    converged: bool
    iterations: int
    objective: float
    last_update: float
    schedule: ControlSchedule
    # state and costate recomputed for the returned schedule
    trajectory: Trajectory
    costates: np.ndarray
    update_history: List[float] = []

    def costate_at(self, k: int) -> CostateState:
        grid = self.schedule.grid
        return CostateState.from_vector(grid.t0 + k * grid.dt, self.costates[k], self.trajectory.n_strains)

    def describe(self) -> Dict[str, Any]:
        u = self.schedule.u
        return {
            "converged": self.converged,
            "iterations": self.iterations,
            "objective": self.objective,
            "last_update": self.last_update,
            "u_mean": float(np.mean(u)),
            "u_min": float(np.min(u)),
            "u_max": float(np.max(u)),
        }
