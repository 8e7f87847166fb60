"""CSV and SVG artifacts for trajectories and summaries."""
import logging
import math
from pathlib import Path
from typing import Dict, List, Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from app.core.config import CHART_MAX_ROWS, CSV_FLOAT_FORMAT, SVG_HASH_SALT  # noqa: E402
from app.core.errors import ConfigurationError  # noqa: E402
from app.models.control import FbsmReport  # noqa: E402
from app.models.grid import ControlSchedule, TimeGrid, Trajectory  # noqa: E402
from app.models.summary import TrajectorySummary  # noqa: E402

logger = logging.getLogger(__name__)

COLORS = {"S": "tab:blue", "E": "tab:orange", "I": "tab:red", "R": "tab:green"}
LINESTYLES = ["-", "--", ":", "-."]


def trajectory_frame(traj: Trajectory) -> pd.DataFrame:
    cols: Dict[str, np.ndarray] = {"t": traj.t, "P": traj.P}
    S, E, I, R = traj.S, traj.E, traj.I, traj.R
    for j in range(traj.n_strains):
        cols[f"S_{j + 1}"] = S[:, j]
        cols[f"E_{j + 1}"] = E[:, j]
        cols[f"I_{j + 1}"] = I[:, j]
        cols[f"R_{j + 1}"] = R[:, j]
    cols["u"] = traj.u
    return pd.DataFrame(cols)


def write_csv(df: pd.DataFrame, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n", encoding="utf-8")
    return path


def read_csv(path: Path) -> pd.DataFrame:
    return pd.read_csv(path, float_precision="round_trip")


def write_trajectory_csv(traj: Trajectory, path: Path) -> Path:
    return write_csv(trajectory_frame(traj), path)


def write_summary_csv(summary: TrajectorySummary, path: Path, extra: Optional[Dict[str, object]] = None) -> Path:
    rows = summary.rows()
    for row in rows:
        row.update(extra or {})
    return write_csv(pd.DataFrame(rows), path)


def write_history_csv(report: FbsmReport, path: Path) -> Path:
    """Sup-norm control update of every sweep iteration."""
    history = list(report.update_history)
    df = pd.DataFrame({"iteration": np.arange(1, len(history) + 1), "update": history})
    return write_csv(df, path)


def schedule_from_csv(path: Path, grid: TimeGrid) -> ControlSchedule:
    """Read a `t,u` CSV that lives on exactly the scenario grid."""
    try:
        df = read_csv(path)
    except (OSError, ValueError) as e:
        raise ConfigurationError(f"cannot read schedule file {path}: {e}") from e
    if not {"t", "u"}.issubset(df.columns):
        raise ConfigurationError(f"schedule file {path} needs columns t and u")
    if len(df) != grid.N + 1 or not np.allclose(df["t"].to_numpy(), grid.times, rtol=0, atol=1e-9 * max(1.0, grid.T)):
        raise ConfigurationError(f"schedule file {path} is not on the scenario grid ({grid.N + 1} points, dt={grid.dt})")
    return ControlSchedule(grid=grid, u=df["u"].to_numpy())


# ---- charts ----

def _stride(n_rows: int) -> int:
    return max(1, math.ceil(n_rows / CHART_MAX_ROWS))


def _save_svg(fig, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context({"svg.hashsalt": SVG_HASH_SALT, "svg.fonttype": "none"}):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def plot_compartments(traj: Trajectory, path: Path, title: str = "") -> Path:
    """Every compartment of every strain as a share of P(0), plus P itself."""
    k = _stride(traj.grid.N + 1)
    t = traj.t[::k]
    P0 = traj.P[0] if traj.P[0] > 0 else 1.0
    series = {"S": traj.S, "E": traj.E, "I": traj.I, "R": traj.R}

    fig, ax = plt.subplots(figsize=(9, 5))
    for j in range(traj.n_strains):
        style = LINESTYLES[j % len(LINESTYLES)]
        for comp, values in series.items():
            label = f"{comp}_{j + 1}"
            ax.plot(t, values[::k, j] / P0, color=COLORS[comp], linestyle=style, label=label, gid=f"series-{label}")
    ax.plot(t, traj.P[::k] / P0, color="black", label="P", gid="series-P")
    ax.set_xlabel("days")
    ax.set_ylabel("share of P(0)")
    ax.set_title(title)
    ax.legend(loc="upper right", fontsize="small", ncol=traj.n_strains)
    return _save_svg(fig, path)


def plot_control(traj: Trajectory, path: Path, title: str = "") -> Path:
    k = _stride(traj.grid.N + 1)
    fig, ax = plt.subplots(figsize=(9, 3.5))
    ax.plot(traj.t[::k], traj.u[::k], color="tab:purple", label="u", gid="series-u")
    ax.set_ylim(-0.02, 1.02)
    ax.set_xlabel("days")
    ax.set_ylabel("mitigation u(t)")
    ax.set_title(title)
    return _save_svg(fig, path)


def series_count(n_strains: int) -> int:
    """Series drawn by plot_compartments."""
    return 4 * n_strains + 1


def export_run(traj: Trajectory, summary: TrajectorySummary, out_dir: Path,
               svg: bool = True, control_chart: bool = False, title: str = "") -> List[Path]:
    out_dir = Path(out_dir)
    files = [
        write_trajectory_csv(traj, out_dir / "trajectory.csv"),
        write_summary_csv(summary, out_dir / "summary.csv"),
    ]
    if svg:
        files.append(plot_compartments(traj, out_dir / "compartments.svg", title=title))
        if control_chart:
            files.append(plot_control(traj, out_dir / "control.svg", title=title))
    logger.info("wrote %s", ", ".join(p.name for p in files))
    return files
