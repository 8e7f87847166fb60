import math
import textwrap

import numpy as np
import pytest

from app.core.errors import ConfigParseError, ConfigurationError
from app.main import main
from app.models.grid import ControlSchedule
from app.models.scenario import NoControl, OptimizeControl
from app.services.cache import cache_set, load_solution, solution_key
from app.services.control_opt import objective
from app.services.export import read_csv
from app.services.integrator import simulate
from app.services.scenarios import (
    PRESETS_DIR,
    apply_overrides,
    list_presets,
    load_config,
    load_scenario,
    optimize_scenario,
    run_scenario,
    set_path,
    sweep,
)

TOWN = """
name: town
population:
  total: 1000
strains:
  - beta: 3.3e-4
    sigma: "1/5"
    gamma: "1/10"
    delta: "1/50"
    mu: 0.01
    initial: {E: 10, I: 5}
grid:
  horizon: 20
  dt: 0.1
control:
  mode: constant
  u: 0.2
analysis:
  window: 5
output:
  svg: false
"""

TOWN_OPTIMIZE = TOWN.replace(
    "  mode: constant\n  u: 0.2\n",
    "  mode: optimize\n  c2: 0.5\n  max_iter: 200\n  tol: 1.0e-6\n",
)


def write(tmp_path, text, name="scenario.yaml"):
    path = tmp_path / name
    path.write_text(textwrap.dedent(text), encoding="utf-8")
    return path


def test_presets_are_bundled():
    names = list_presets()
    for expected in ["experiment1", "experiment2", "experiment3"] + [f"case_{c}" for c in "ABCDEF"]:
        assert expected in names


def test_experiment1_preset_values():
    config = load_scenario("experiment1")
    (p,) = config.params()
    assert p.beta == 2.41e-9
    assert p.sigma == 1 / 7 and p.gamma == 1 / 21 and p.delta == 1 / 90
    assert p.mu == 1.152e-5
    assert config.initial_population() == 217000255.0
    state = config.initial_state()
    assert (state.E, state.I, state.R) == ((252.0,), (2.0,), (1.0,))
    assert isinstance(config.control, NoControl)
    assert config.time_grid().N == 14600
    assert config.seed_events() == []


def test_two_strain_presets():
    exp2 = load_scenario("experiment2")
    (event,) = exp2.seed_events()
    assert (event.time, event.strain, event.E, event.I, event.R) == (180.0, 1, 252.0, 2.0, 1.0)
    assert exp2.initial_state().I == (2.0, 0.0)
    exp3 = load_scenario("experiment3")
    assert exp3.params()[1].beta == pytest.approx(1.7 * 2.41e-9, rel=1e-15)


def test_case_costs():
    assert load_scenario("case_A").costs().c2 == pytest.approx(math.log(217000255.0), rel=1e-15)
    assert load_scenario("case_F").costs().c2 == pytest.approx(0.5 * math.log(217000255.0), rel=1e-15)
    for name in ("case_A", "case_F"):
        config = load_scenario(name)
        assert isinstance(config.control, OptimizeControl)
        assert config.costs().c1 == 1.0


def test_c2_relative_to_susceptible(tmp_path):
    text = TOWN_OPTIMIZE.replace("  total: 1000", "  susceptible: 985").replace(
        "  c2: 0.5\n", "  c2_log_factor: 1.0\n  c2_log_of: susceptible\n")
    config = load_config(write(tmp_path, text))
    assert config.initial_population() == 1000.0
    assert config.costs().c2 == pytest.approx(math.log(985.0))


def test_empty_and_malformed_files(tmp_path):
    with pytest.raises(ConfigParseError):
        load_config(write(tmp_path, ""))
    with pytest.raises(ConfigParseError) as exc:
        load_config(write(tmp_path, "name: x\nstrains: [1, 2\n"))
    assert exc.value.line is not None and exc.value.column is not None
    assert "line" in str(exc.value)
    with pytest.raises(ConfigParseError):
        load_config(write(tmp_path, "- just\n- a list\n"))
    with pytest.raises(ConfigurationError):
        load_config(tmp_path / "missing.yaml")


def test_validation_errors_name_the_field(tmp_path):
    with pytest.raises(ConfigurationError) as exc:
        load_config(write(tmp_path, TOWN.replace("  dt: 0.1", "  dt: 0.1\n  step: 3")))
    assert "grid.step" in str(exc.value)
    with pytest.raises(ConfigurationError) as exc:
        load_config(write(tmp_path, TOWN.replace('sigma: "1/5"', 'sigma: "one fifth"')))
    assert "strains.0.sigma" in str(exc.value)
    with pytest.raises(ConfigurationError):
        load_config(write(tmp_path, TOWN.replace("  total: 1000", "  total: 1000\n  susceptible: 900")))
    with pytest.raises(ConfigurationError):
        load_config(write(tmp_path, TOWN.replace("  u: 0.2", "  u: 1.5")))


def test_activation_time_must_sit_on_the_grid():
    with pytest.raises(ConfigurationError):
        load_scenario("experiment2", {"dt": 0.07})
    with pytest.raises(ConfigurationError):
        load_scenario("experiment2", {"seed_day": 180.01})


def test_overrides():
    config = load_scenario("experiment2", {"dt": 0.1, "horizon": 200, "seed_day": 60, "out": "elsewhere", "svg": False})
    assert config.grid.dt == 0.1
    assert config.time_grid().N == 2000
    assert config.seed_events()[0].time == 60.0
    assert config.output.dir == "elsewhere" and config.output.svg is False
    # the trailing window never outruns a shortened horizon
    assert load_scenario("experiment1", {"horizon": 30}).analysis.window == 30.0
    raw = {"name": "x"}
    assert apply_overrides(raw, {"dt": 0.2}) == {"name": "x", "grid": {"dt": 0.2}}
    assert raw == {"name": "x"}


def test_schedule_file_resolves_next_to_the_config(tmp_path):
    grid_points = 201
    t = np.round(np.arange(grid_points) * 0.1, 10)
    (tmp_path / "u.csv").write_text("t,u\n" + "".join(f"{x:.10g},0.25\n" for x in t), encoding="utf-8")
    config = load_config(write(tmp_path, TOWN.replace("  mode: constant\n  u: 0.2\n", "  mode: schedule\n  file: u.csv\n")))
    result = run_scenario(config, out_dir=tmp_path / "run", echo=False)
    assert np.all(result.trajectory.u == 0.25)


def test_run_scenario_writes_artifacts(tmp_path, capsys):
    config = load_config(write(tmp_path, TOWN))
    result = run_scenario(config, out_dir=tmp_path / "run")
    assert result.exit_code == 0
    assert sorted(p.name for p in result.files) == ["summary.csv", "trajectory.csv"]
    assert (tmp_path / "run" / "trajectory.csv").exists()
    assert "peak_infected" in capsys.readouterr().out


def test_same_config_same_bytes(tmp_path):
    config = load_config(write(tmp_path, TOWN))
    run_scenario(config, out_dir=tmp_path / "a", echo=False)
    run_scenario(config, out_dir=tmp_path / "b", echo=False)
    for name in ("trajectory.csv", "summary.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_optimize_run_and_cache(tmp_path):
    config = load_config(write(tmp_path, TOWN_OPTIMIZE))
    cache_dir = tmp_path / "cache"
    first = run_scenario(config, out_dir=tmp_path / "a", cache_dir=cache_dir, use_cache=True, echo=False)
    assert first.report is not None
    assert (tmp_path / "a" / "fbsm_history.csv").exists()
    assert len(list(cache_dir.glob("fbsm_*.json"))) == 1

    second = run_scenario(config, out_dir=tmp_path / "b", cache_dir=cache_dir, use_cache=True, echo=False)
    assert np.array_equal(second.report.schedule.u, first.report.schedule.u)
    assert second.report.objective == first.report.objective
    assert second.report.iterations == first.report.iterations
    assert second.report.converged == first.report.converged


def test_malformed_cache_entry_is_a_miss(tmp_path, caplog):
    key = solution_key({"any": "inputs"})
    (tmp_path / f"{key}.json").write_text("{not json", encoding="utf-8")
    assert load_solution(key, tmp_path) is None
    assert "unreadable" in caplog.text
    cache_set(key, {"u": [0.0]}, cache_dir=tmp_path)
    assert load_solution(key, tmp_path) is None
    (tmp_path / f"{key}.json").write_text("[]", encoding="utf-8")
    assert load_solution(key, tmp_path) is None


def test_non_convergence_exit_code(tmp_path):
    text = TOWN_OPTIMIZE.replace("  max_iter: 200\n  tol: 1.0e-6\n", "  max_iter: 1\n  tol: 1.0e-300\n")
    result = run_scenario(load_config(write(tmp_path, text)), out_dir=tmp_path / "run", echo=False)
    assert result.exit_code == 3
    assert not result.report.converged


def test_set_path():
    config = load_scenario("experiment3")
    changed = set_path(config, "strains.1.beta_factor", 1.0)
    assert changed.params()[1].beta == changed.params()[0].beta
    assert config.params()[1].beta != config.params()[0].beta
    for bad in ("strains.5.beta", "strains.x.beta", "grid.nope", "name", "strains.1.initial", ""):
        with pytest.raises(ConfigurationError):
            set_path(config, bad, 1.0)
    with pytest.raises(ConfigurationError):
        set_path(config, "grid.dt", -1.0)


def test_sweep_writes_one_directory_per_value(tmp_path):
    config = load_config(write(tmp_path, TOWN))
    code, path = sweep(config, "control.u", [0.0, 0.5], out_dir=tmp_path / "sweep", workers=1)
    assert code == 0
    df = read_csv(path)
    assert df["value"].tolist() == [0.0, 0.5]
    assert (tmp_path / "sweep" / "00_u_0" / "trajectory.csv").exists()
    assert (tmp_path / "sweep" / "01_u_0.5" / "trajectory.csv").exists()
    # more mitigation, smaller peak
    assert df["peak_infected"][1] < df["peak_infected"][0]
    with pytest.raises(ConfigurationError):
        sweep(config, "control.nope", [1.0], out_dir=tmp_path / "bad")


def test_single_value_sweep_matches_run(tmp_path):
    config = load_config(write(tmp_path, TOWN))
    sweep(config, "control.u", [0.2], out_dir=tmp_path / "sweep")
    run_scenario(config, out_dir=tmp_path / "run", echo=False)
    swept = (tmp_path / "sweep" / "00_u_0.2" / "trajectory.csv").read_bytes()
    assert swept == (tmp_path / "run" / "trajectory.csv").read_bytes()


# ---- command line ----

def test_cli_presets(tmp_path, capsys):
    assert main(["presets", "list"]) == 0
    assert "case_A" in capsys.readouterr().out
    assert main(["presets", "write", "experiment1", str(tmp_path)]) == 0
    assert (tmp_path / "experiment1.yaml").read_bytes() == (PRESETS_DIR / "experiment1.yaml").read_bytes()
    assert main(["presets", "write", "nope", str(tmp_path)]) == 2


def test_cli_simulate(tmp_path):
    out = tmp_path / "out"
    code = main(["--quiet", "simulate", "experiment1", "--horizon", "30", "--out", str(out), "--no-svg"])
    assert code == 0
    assert (out / "trajectory.csv").exists()
    assert not (out / "compartments.svg").exists()
    df = read_csv(out / "trajectory.csv")
    assert list(df.columns) == ["t", "P", "S_1", "E_1", "I_1", "R_1", "u"]
    assert df["t"].iloc[-1] == pytest.approx(30.0)


def test_cli_exit_codes(tmp_path):
    bad = write(tmp_path, TOWN.replace("  dt: 0.1", "  dt: 0.1\n  step: 3"))
    assert main(["simulate", str(bad), "--quiet"]) == 2
    assert main(["simulate", str(tmp_path / "missing.yaml"), "--quiet"]) == 2
    # verbs and control modes must agree
    assert main(["optimize", str(write(tmp_path, TOWN, "town.yaml")), "--quiet"]) == 2
    assert main(["simulate", "case_A", "--quiet"]) == 2
    assert main(["sweep", str(write(tmp_path, TOWN, "town.yaml")), "--param", "control.u",
                 "--values", "a,b", "--quiet"]) == 2


def test_cli_blow_up_is_an_integration_failure(tmp_path):
    text = TOWN.replace("beta: 3.3e-4", "beta: 1.0").replace("  horizon: 20\n  dt: 0.1", "  horizon: 50\n  dt: 1.0")
    assert main(["simulate", str(write(tmp_path, text)), "--quiet"]) == 4


def test_cli_zero_horizon(tmp_path):
    out = tmp_path / "out"
    assert main(["simulate", "experiment1", "--horizon", "0", "--out", str(out), "--quiet"]) == 0
    assert len(read_csv(out / "trajectory.csv")) == 1
    assert read_csv(out / "summary.csv")["plateau_S_flat"].tolist() == [True]


def test_cli_sweep(tmp_path, capsys):
    path = write(tmp_path, TOWN)
    code = main(["sweep", str(path), "--param", "control.u", "--values", "0.1,0.3",
                 "--out", str(tmp_path / "sweep"), "--quiet"])
    assert code == 0
    assert (tmp_path / "sweep" / "sweep_summary.csv").exists()
    assert "sweep_summary.csv" in capsys.readouterr().out



# ---- optimal lockdown presets (two-year solves) ----

@pytest.fixture(scope="module")
def solved_cases():
    solved = {}
    for case in "ABCDEF":
        config = load_scenario(f"case_{case}")
        solved[case] = (config, optimize_scenario(config))
    return solved


def u_at(config, report, day):
    return float(report.schedule.u[config.time_grid().index_of(day)])


def plateau(config, report, start=90.0, end=640.0):
    grid = config.time_grid()
    return float(np.median(report.schedule.u[grid.index_of(start):grid.index_of(end) + 1]))


@pytest.mark.slow
def test_every_case_converges(solved_cases):
    means = []
    for case, (config, report) in solved_cases.items():
        assert report.converged, case
        assert report.iterations <= config.control.max_iter
        assert report.last_update < config.control.tol
        means.append(float(np.mean(report.schedule.u)))
    print(f"\n[TEST] mean mitigation A..F: {means}")
    assert all(b >= a - 1e-6 for a, b in zip(means, means[1:]))


@pytest.mark.slow
def test_case_A_lockdown_shape(solved_cases):
    config, report = solved_cases["A"]
    assert u_at(config, report, 90.0) == pytest.approx(0.50, abs=0.05)
    assert u_at(config, report, 180.0) == pytest.approx(0.375, abs=0.05)
    assert u_at(config, report, 240.0) == pytest.approx(0.40, abs=0.05)


@pytest.mark.slow
def test_cheap_control_plateaus(solved_cases):
    e = plateau(*solved_cases["E"])
    f = plateau(*solved_cases["F"])
    print(f"\n[TEST] plateau E={e:.3f} F={f:.3f}")
    assert f == pytest.approx(0.88, abs=0.05)
    # E settles a little above the published 0.80, see DESIGN.md
    assert 0.75 <= e <= 0.92
    assert e <= f + 0.01


@pytest.mark.slow
def test_optimum_beats_constant_lockdowns(solved_cases):
    for case, (config, report) in solved_cases.items():
        grid = config.time_grid()
        costs = config.costs()
        for c in (0.0, 0.25, 0.5, 0.75):
            traj = simulate(config.initial_state(), config.params(), ControlSchedule.constant(grid, c),
                            config.seed_events(), grid)
            assert report.objective >= objective(traj, costs), (case, c)
