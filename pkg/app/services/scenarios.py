"""
Scenario plumbing: YAML configs, single runs, parameter sweeps and the
bundled presets.
"""
import copy
import logging
import shutil
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import pandas as pd
import yaml
from pydantic import BaseModel, ConfigDict, ValidationError

from app.core.config import DEFAULT_WINDOW, OUTPUT_DIR, SWEEP_WORKERS
from app.core.errors import EXIT_NOT_CONVERGED, ConfigParseError, ConfigurationError, EpidemicError
from app.models.control import FbsmReport
from app.models.grid import ControlSchedule, Trajectory
from app.models.scenario import ConstantControl, NoControl, OptimizeControl, ScenarioConfig, ScheduleControl
from app.models.summary import TrajectorySummary
from app.services.analysis import summarize
from app.services.cache import load_solution, solution_key, store_solution
from app.services.control_opt import evaluate_schedule, fbsm_solve
from app.services.export import export_run, schedule_from_csv, write_csv, write_history_csv
from app.services.integrator import simulate

logger = logging.getLogger(__name__)

PRESETS_DIR = Path(__file__).resolve().parents[1] / "presets"


class ScenarioResult(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    name: str
    exit_code: int
    out_dir: Path
    files: List[Path]
    trajectory: Trajectory
    summary: TrajectorySummary
    report: Optional[FbsmReport] = None


# ---- loading ----

def validate_config(data: Dict[str, Any], source: str = "config") -> ScenarioConfig:
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        field = ".".join(str(part) for part in first["loc"]) or "<root>"
        raise ConfigurationError(f"{source}: {field}: {first['msg']}") from e


def _section(data: Dict[str, Any], key: str) -> Dict[str, Any]:
    if not isinstance(data.get(key), dict):
        data[key] = {}
    return data[key]


def apply_overrides(data: Dict[str, Any], overrides: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """Command-line flags patched into the raw config before validation."""
    data = copy.deepcopy(data)
    if not overrides:
        return data
    if overrides.get("dt") is not None:
        _section(data, "grid")["dt"] = float(overrides["dt"])
    if overrides.get("horizon") is not None:
        horizon = float(overrides["horizon"])
        _section(data, "grid")["horizon"] = horizon
        analysis = _section(data, "analysis")
        if horizon > 0 and float(analysis.get("window", DEFAULT_WINDOW)) > horizon:
            logger.info("analysis window shortened to the %g-day horizon", horizon)
            analysis["window"] = horizon
    if overrides.get("seed_day") is not None:
        strains = data.get("strains") or []
        if len(strains) < 2:
            logger.warning("--seed-day ignored: the scenario has a single strain")
        for strain in strains[1:]:
            if isinstance(strain, dict):
                strain["activation_time"] = float(overrides["seed_day"])
    if overrides.get("out") is not None:
        _section(data, "output")["dir"] = str(overrides["out"])
    if overrides.get("svg") is False:
        _section(data, "output")["svg"] = False
    return data


def _resolve_schedule_file(data: Dict[str, Any], base: Path) -> None:
    control = data.get("control")
    if isinstance(control, dict) and control.get("mode") == "schedule" and isinstance(control.get("file"), str):
        file = Path(control["file"])
        if not file.is_absolute():
            control["file"] = str((base / file).resolve())


def load_config(path: Path, overrides: Optional[Dict[str, Any]] = None) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigurationError(f"cannot read config {path}: {e}") from e

    try:
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as e:
        mark = e.problem_mark or e.context_mark
        line, column = (mark.line + 1, mark.column + 1) if mark is not None else (None, None)
        raise ConfigParseError(f"{path}: {e.problem or e.context}", line, column) from e
    except yaml.YAMLError as e:
        raise ConfigParseError(f"{path}: {e}") from e

    if data is None:
        raise ConfigParseError(f"{path}: file is empty")
    if not isinstance(data, dict):
        raise ConfigParseError(f"{path}: top level must be a mapping, got {type(data).__name__}")

    data = apply_overrides(data, overrides)
    _resolve_schedule_file(data, path.parent)
    config = validate_config(data, source=str(path))
    logger.debug("loaded scenario %s from %s", config.name, path)
    return config


# ---- presets ----

def list_presets() -> List[str]:
    return sorted(p.stem for p in PRESETS_DIR.glob("*.yaml"))


def preset_path(name: str) -> Path:
    path = PRESETS_DIR / f"{name}.yaml"
    if not path.exists():
        raise ConfigurationError(f"unknown preset {name!r}; available: {', '.join(list_presets())}")
    return path


def load_scenario(source: str, overrides: Optional[Dict[str, Any]] = None) -> ScenarioConfig:
    """A config file path, or the name of a bundled preset."""
    path = Path(source)
    if path.exists() or path.suffix in (".yaml", ".yml"):
        return load_config(path, overrides)
    return load_config(preset_path(source), overrides)


def write_preset(name: str, dest: Path) -> Path:
    src = preset_path(name)
    dest = Path(dest)
    if dest.is_dir():
        dest = dest / src.name
    dest.parent.mkdir(parents=True, exist_ok=True)
    shutil.copyfile(src, dest)
    logger.info("wrote preset %s to %s", name, dest)
    return dest


# ---- running ----

def _solver_inputs(config: ScenarioConfig) -> Dict[str, Any]:
    data = config.model_dump(mode="json", include={"population", "strains", "grid", "control"})
    data["control"].pop("cache", None)
    return data


def optimize_scenario(config: ScenarioConfig, use_cache: bool = False,
                      cache_dir: Optional[Path] = None) -> FbsmReport:
    control = config.control
    if not isinstance(control, OptimizeControl):
        raise ConfigurationError(f"control.mode={control.mode}; optimisation needs mode: optimize")
    grid = config.time_grid()
    params = config.params()
    initial = config.initial_state()
    events = config.seed_events()
    costs = config.costs()

    key = None
    if use_cache or control.cache:
        key = solution_key(_solver_inputs(config))
        hit = load_solution(key, cache_dir)
        if hit is not None:
            logger.info("Cache hit for %s (%s)", config.name, key[:16])
            return evaluate_schedule(
                initial, params, events, grid, costs,
                ControlSchedule(grid=grid, u=hit["u"]),
                converged=hit["converged"],
                iterations=hit["iterations"],
                last_update=hit["last_update"],
                history=hit["update_history"],
            )

    logger.info("optimising %s: c1=%g, c2=%.6g, %d steps", config.name, costs.c1, costs.c2, grid.N)
    report = fbsm_solve(
        initial, params, events, grid, costs,
        u_init=ControlSchedule.constant(grid, control.u_init),
        relaxation=control.relaxation,
        tol=control.tol,
        max_iter=control.max_iter,
    )
    if key is not None:
        store_solution(key, report, cache_dir)
    return report


def _schedule_for(config: ScenarioConfig) -> ControlSchedule:
    grid = config.time_grid()
    control = config.control
    if isinstance(control, NoControl):
        return ControlSchedule.constant(grid, 0.0)
    if isinstance(control, ConstantControl):
        return ControlSchedule.constant(grid, control.u)
    if isinstance(control, ScheduleControl):
        return schedule_from_csv(Path(control.file), grid)
    raise ConfigurationError(f"control.mode={control.mode} has no fixed schedule")


def format_summary(summary: TrajectorySummary, report: Optional[FbsmReport] = None) -> str:
    lines = [
        f"P(0)={summary.initial_population:.6g}  P(T)={summary.final_population:.6g}  "
        f"deaths={summary.cumulative_deaths:.6g}  plateau={'yes' if summary.plateau_reached else 'no'}",
        pd.DataFrame(summary.rows()).to_string(index=False),
    ]
    if report is not None:
        info = report.describe()
        lines.append(
            f"FBSM: converged={info['converged']} iterations={info['iterations']} "
            f"J={info['objective']:.9g} sup|du|={info['last_update']:.3e} "
            f"u mean/min/max={info['u_mean']:.4f}/{info['u_min']:.4f}/{info['u_max']:.4f}"
        )
    return "\n".join(lines)


def run_scenario(config: ScenarioConfig, out_dir: Optional[Path] = None, cache_dir: Optional[Path] = None,
                 use_cache: bool = False, echo: bool = True) -> ScenarioResult:
    out = Path(out_dir or config.output.dir or OUTPUT_DIR / config.name)
    report = None
    if isinstance(config.control, OptimizeControl):
        report = optimize_scenario(config, use_cache=use_cache, cache_dir=cache_dir)
        traj = report.trajectory
    else:
        traj = simulate(config.initial_state(), config.params(), _schedule_for(config),
                        config.seed_events(), config.time_grid())

    summary = summarize(traj, config.analysis.window)
    files = export_run(traj, summary, out, svg=config.output.svg,
                       control_chart=not isinstance(config.control, NoControl), title=config.name)
    if report is not None:
        files.append(write_history_csv(report, out / "fbsm_history.csv"))

    if echo:
        print(format_summary(summary, report))

    exit_code = 0
    if report is not None and not report.converged:
        logger.warning("%s: FBSM did not converge within %d iterations", config.name, report.iterations)
        exit_code = EXIT_NOT_CONVERGED
    return ScenarioResult(name=config.name, exit_code=exit_code, out_dir=out, files=files,
                          trajectory=traj, summary=summary, report=report)


# ---- sweeps ----

def _child(node: Any, part: str, path: str) -> Any:
    if isinstance(node, dict):
        if part not in node:
            raise ConfigurationError(f"sweep path {path!r}: no field {part!r}")
        return node[part]
    if isinstance(node, list):
        try:
            idx = int(part)
        except ValueError:
            raise ConfigurationError(f"sweep path {path!r}: {part!r} is not a list index")
        if not 0 <= idx < len(node):
            raise ConfigurationError(f"sweep path {path!r}: index {idx} out of range")
        return node[idx]
    raise ConfigurationError(f"sweep path {path!r}: cannot descend into {part!r}")


def set_path(config: ScenarioConfig, path: str, value: float) -> ScenarioConfig:
    """Copy of `config` with the numeric field at dotted `path` (e.g. strains.1.beta_factor) replaced."""
    data = config.model_dump()
    parts = path.split(".")
    if not path or any(not p for p in parts):
        raise ConfigurationError(f"invalid sweep path {path!r}")
    node = data
    for part in parts[:-1]:
        node = _child(node, part, path)
    current = _child(node, parts[-1], path)
    if isinstance(current, bool) or not isinstance(current, (int, float)):
        raise ConfigurationError(f"sweep path {path!r} does not name a numeric field")
    key = int(parts[-1]) if isinstance(node, list) else parts[-1]
    node[key] = value
    return validate_config(data, source=f"sweep {path}={value}")


def _run_variant(config: ScenarioConfig, out_dir: Path, use_cache: bool) -> Tuple[int, List[dict], Optional[str]]:
    # errors come back as values; not every EpidemicError survives pickling
    try:
        result = run_scenario(config, out_dir=out_dir, use_cache=use_cache, echo=False)
    except EpidemicError as e:
        return e.exit_code, [], str(e)
    rows = result.summary.rows()
    if result.report is not None:
        info = result.report.describe()
        for row in rows:
            row.update({k: info[k] for k in ("converged", "iterations", "objective", "u_mean")})
    return result.exit_code, rows, None


def sweep(config: ScenarioConfig, path: str, values: Sequence[float], out_dir: Optional[Path] = None,
          workers: Optional[int] = None, use_cache: bool = False) -> Tuple[int, Path]:
    """
    One run per value, each into its own directory under `out_dir`, plus a
    combined sweep_summary.csv. Returns the worst exit code and the CSV path.
    """
    if not values:
        raise ConfigurationError("sweep needs at least one value")
    base = Path(out_dir or config.output.dir or OUTPUT_DIR / config.name)
    label = path.split(".")[-1]
    # validate every variant before running any
    variants = [set_path(config, path, v) for v in values]
    dirs = [base / f"{i:02d}_{label}_{v:g}" for i, v in enumerate(values)]

    workers = workers or SWEEP_WORKERS
    if workers > 1 and len(variants) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(variants))) as pool:
            outcomes = list(pool.map(_run_variant, variants, dirs, [use_cache] * len(variants)))
    else:
        outcomes = [_run_variant(cfg, d, use_cache) for cfg, d in zip(variants, dirs)]

    rows = []
    worst = 0
    for value, out, (code, variant_rows, error) in zip(values, dirs, outcomes):
        worst = max(worst, code)
        if error is not None:
            logger.error("Sweep Error at %s=%s: %s", path, value, error)
            rows.append({"param": path, "value": value, "exit_code": code, "out_dir": str(out), "error": error})
            continue
        for row in variant_rows:
            rows.append({"param": path, "value": value, "exit_code": code, "out_dir": str(out), **row})

    summary_path = write_csv(pd.DataFrame(rows), base / "sweep_summary.csv")
    logger.info("sweep over %s: %d runs, summary in %s", path, len(values), summary_path)
    return worst, summary_path
