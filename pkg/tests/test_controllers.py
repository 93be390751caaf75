import json

import pytest

from controllers.main_controller import DEFAULT_CONFIG, MainController, aggregate, exit_code
from controllers.series_controller import SeriesController
from controllers.simulation_controller import SimulationController
from controllers.suite_result import EXIT_FAILURES, EXIT_OK, EXIT_USAGE, SuiteResult, guarded
from models.errors import BoundaryError, ConfigError, CostGuardError, LatticeError
from models.ledger_engine import CheckReport
from models.lattice_model import BoundaryCondition, Lattice, LatticeSpec, dumbbell, site


@pytest.fixture
def controller(tmp_path):
    return MainController(str(tmp_path / "absent.json"))


def test_suite_result_status():
    result = SuiteResult("demo")
    assert result.check("ok", True)
    assert (result.status, result.code) == ("pass", EXIT_OK)
    result.add_report(CheckReport("broken", checked=1, failures=1))
    assert (result.status, result.code) == ("fail", EXIT_FAILURES)
    body = result.as_dict()
    assert list(body)[:3] == ["command", "status", "parameters"]
    assert body["checks"][1]["name"] == "broken"


@pytest.mark.parametrize("error, code", [
    (CostGuardError("bonds", 12, 54), EXIT_USAGE),
    (LatticeError("bad"), EXIT_USAGE),
    (ConfigError("bad"), EXIT_USAGE),
    (BoundaryError("bad"), EXIT_FAILURES),
])
def test_guarded_maps_errors_to_exit_codes(error, code):
    result = SuiteResult("demo")
    with guarded(result):
        raise error
    assert result.status == "error"
    assert result.code == code


def test_guard_name_is_reported():
    result = SuiteResult("demo")
    with guarded(result):
        raise CostGuardError("max_edges", 16, 20)
    assert result.values["guard"] == "max_edges"


def test_config_file_overrides_defaults(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"beta": 0.5, "tolerances": {"series": 1e-6}}), encoding="utf-8")
    config = MainController(str(path)).config
    assert config["beta"] == 0.5
    assert config["tolerances"] == {**DEFAULT_CONFIG["tolerances"], "series": 1e-6}
    assert config["grid"] == DEFAULT_CONFIG["grid"]


def test_unreadable_config_keeps_defaults(tmp_path):
    path = tmp_path / "config.json"
    path.write_text("{not json", encoding="utf-8")
    assert MainController(str(path)).config == DEFAULT_CONFIG


def test_stochastic_commands_need_a_seed(controller):
    with pytest.raises(ConfigError):
        controller.resolve({"command": "probe"})
    with pytest.raises(ConfigError):
        controller.resolve({"command": "infrared-bound"})
    params = controller.resolve({"command": "probe", "seed": 3})
    assert params["seed"] == 3 and params["workers"] >= 1
    assert controller.resolve({"command": "infrared-bound", "mc": "mc.json"})["mc"] == "mc.json"


@pytest.mark.parametrize("override", [{"grid": 31}, {"grid": 16}, {"sweeps": 10}, {"batches": 5},
                                      {"workers": -1}, {"probe_cap": 0}, {"checks": ["nope"]},
                                      {"oracle_points": 4}])
def test_invalid_parameters(controller, override):
    with pytest.raises(ConfigError):
        controller.resolve({"command": "infrared", **override})


def test_run_turns_usage_errors_into_results(controller):
    (result,) = controller.run({"command": "oracle"})
    assert result.status == "error"
    assert result.code == EXIT_USAGE


def test_switch_verify_defaults(controller):
    (result,) = controller.run({"command": "switch-verify", "max_edges": 4})
    assert result.status == "pass"
    assert result.values["lambda_count"] == result.values["gamma_count"]


def test_pairing_verify_selected_checks(controller):
    (result,) = controller.run({"command": "pairing-verify", "checks": ["psi", "upsilon"], "max_edges": 4})
    assert [c["name"] for c in result.checks] == ["psi", "figure instance"]
    assert result.status == "pass"


def test_aggregate_and_exit_code():
    ok, failed, broken = SuiteResult("a"), SuiteResult("b"), SuiteResult("c")
    failed.check("x", False)
    broken.error, broken.exit_code = "guard", EXIT_USAGE
    assert aggregate([ok])["command"] == "a"
    merged = aggregate([ok, failed])
    assert merged["status"] == "fail" and len(merged["suites"]) == 2
    assert exit_code([ok, failed]) == EXIT_FAILURES
    assert exit_code([failed, broken]) == EXIT_USAGE
    assert exit_code([ok]) == EXIT_OK


def test_pairing_verify_switch_uses_config_lattice(controller, tmp_path):
    path = tmp_path / "cycle.cfg"
    path.write_text("topology = cycle\nx = (0,0,0)\ny = (2,0,0)\n", encoding="utf-8")
    (result,) = controller.run({"command": "pairing-verify", "config": str(path), "checks": ["switch"],
                                "max_edges": 4})
    assert result.parameters["switch_lattice"] == "cycle4"
    assert (result.parameters["x"], result.parameters["y"]) == (site(0), site(2))
    (check,) = result.checks
    assert check["name"] == "switch" and check["checked"] + check["skipped"] > 0
    assert result.status == "pass"


def test_pairing_verify_switch_falls_back_to_square(controller):
    (result,) = controller.run({"command": "pairing-verify", "checks": ["switch"], "max_edges": 4})
    assert result.parameters["switch_lattice"] == "square+ghost"
    assert result.status == "pass"


def test_series_reports_sigma_split_of_dominant_terms():
    result = SeriesController(dict(DEFAULT_CONFIG)).series(LatticeSpec(dumbbell()), "1/2", 8, 64)
    assert result.status == "pass"
    table = result.table
    assert table["rank"].tolist() == [0, 1, 2]
    assert (table["n_backward"] - table["n_forward"]).tolist() == [1, 1, 1]
    assert table["weight"].is_monotonic_decreasing


@pytest.fixture
def quick_sim():
    return SimulationController({**DEFAULT_CONFIG, "chains": 1, "green_levels": 2})


def test_mc_repeats_over_derived_seeds(quick_sim):
    result = quick_sim.mc(LatticeSpec(dumbbell(), x=site(0), y=site(1)), 3.0, 1000, 5, "twopoint", 1,
                          repeats=20)
    assert result.parameters["repeats"] == 20 and result.parameters["allowed"] == 2
    assert len(result.table) == 20 and result.table["seed"].is_unique
    assert [c["name"] for c in result.checks] == ["3σ sur 20 graines"]
    assert result.status == "pass", result.table


def test_infrared_bound_repeats_on_small_periodic_box(quick_sim):
    result = quick_sim.infrared_bound(0.6, 1, 32, seed=9, workers=1, L=2, sweeps=1000, repeats=3)
    assert result.parameters["lattice"] == Lattice(2, BoundaryCondition.PERIODIC).name
    assert len(result.table) == 3
    assert (result.table["target"] == result.values["rhs"]).all()
    assert result.status == "pass", result.table
