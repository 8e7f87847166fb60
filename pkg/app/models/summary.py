from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict


class StrainSummary(BaseModel):
    model_config = ConfigDict(frozen=True)

    strain: int
    name: Optional[str] = None
    peak_infected: float
    peak_day: float
    # strain with the most infected individuals at this strain's peak
    dominant_at_peak: int
    plateau: Dict[str, float]          # keys S, E, I, R -> mean share of P(0)
    plateau_flags: Dict[str, bool]
    deaths: float


class TrajectorySummary(BaseModel):
    model_config = ConfigDict(frozen=True)

    window: float
    initial_population: float
    final_population: float
    cumulative_deaths: float
    strains: List[StrainSummary]

    @property
    def plateau_reached(self) -> bool:
        return all(all(s.plateau_flags.values()) for s in self.strains)

    def rows(self) -> List[dict]:
        """One flat record per strain, the shape written to summary CSVs."""
        out = []
        for s in self.strains:
            row = {
                "strain": s.strain + 1,
                "name": s.name or f"strain_{s.strain + 1}",
                "peak_infected": s.peak_infected,
                "peak_day": s.peak_day,
                "dominant_at_peak": s.dominant_at_peak + 1,
                "deaths": s.deaths,
                "cumulative_deaths": self.cumulative_deaths,
            }
            for comp in ("S", "E", "I", "R"):
                row[f"plateau_{comp}"] = s.plateau[comp]
                row[f"plateau_{comp}_flat"] = s.plateau_flags[comp]
            out.append(row)
        return out


class StabilityReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    stable: bool
    r0: float
    binding_strain: int
    terms: List[float]
