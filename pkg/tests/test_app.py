import json

import pytest

from app import build_parser, main


@pytest.fixture
def settings(tmp_path):
    return ["--settings", str(tmp_path / "absent.json")]


@pytest.fixture
def dumbbell_config(tmp_path):
    path = tmp_path / "dumbbell.cfg"
    path.write_text("topology = dumbbell\nJ = 1/6\n", encoding="utf-8")
    return str(path)


def _report(capsys):
    return json.loads(capsys.readouterr().out)


def test_oracle_requires_a_lattice_file(settings, capsys):
    assert main(["oracle", *settings]) == 2
    assert "--config" in capsys.readouterr().err


def test_unknown_command_is_a_usage_error():
    assert main(["frobnicate"]) == 2


def test_oracle_on_dumbbell(settings, dumbbell_config, capsys):
    assert main(["oracle", "--config", dumbbell_config, "--beta", "0.3", *settings]) == 0
    report = _report(capsys)
    assert report["schema"] == 1
    assert report["command"] == "oracle"
    assert report["status"] == "pass"
    assert {c["name"] for c in report["checks"]} == {"bessel_Z", "dumbbell I1/I0"}


def test_series_on_dumbbell(settings, dumbbell_config, capsys):
    assert main(["series", "--config", dumbbell_config, "--beta", "1/2", "--max-edges", "8", *settings]) == 0
    report = _report(capsys)
    assert report["Z_trunc"]["exact"].count("/") == 1
    assert report["abs_err"] <= 1e-8


def test_guard_exit(settings, tmp_path, capsys):
    path = tmp_path / "box.cfg"
    path.write_text("L = 2\nbc = free\n", encoding="utf-8")
    assert main(["series", "--config", str(path), *settings]) == 2
    report = _report(capsys)
    assert report["status"] == "error"
    assert report["guard"] == "bonds"


def test_bad_lattice_file(settings, tmp_path, capsys):
    path = tmp_path / "bad.cfg"
    path.write_text("L = 1\nshape = round\n", encoding="utf-8")
    assert main(["oracle", "--config", str(path), *settings]) == 2
    assert "error" in _report(capsys)


def test_missing_seed(settings, capsys):
    assert main(["probe", *settings]) == 2
    assert "--seed" in _report(capsys)["error"]


def test_invalid_grid(settings, capsys):
    assert main(["infrared", "--grid", "31", *settings]) == 2


def test_switch_verify_passes(settings, capsys):
    assert main(["switch-verify", "--max-edges", "4", *settings]) == 0
    report = _report(capsys)
    assert report["parameters"]["x"] == "(0,0,0)"
    assert report["status"] == "pass"


def test_pairing_checks_argument():
    args = build_parser().parse_args(["pairing-verify", "--checks", "psi,upsilon"])
    assert args.checks == ["psi", "upsilon"]
    with pytest.raises(SystemExit):
        build_parser().parse_args(["pairing-verify", "--checks", "psi,magic"])


def test_repeats_argument():
    args = build_parser().parse_args(["mc", "--config", "lattice.cfg", "--repeats", "5"])
    assert args.seed_repeats == 5
    assert build_parser().parse_args(["infrared-bound"]).seed_repeats is None


def test_probe_is_reproducible(settings, capsys):
    argv = ["probe", "--seed", "3", "--steps", "2000", "--every", "100", "--L", "2", "--beta", "0.5", *settings]
    assert main(argv) == 0
    first = capsys.readouterr().out
    assert main(argv) == 0
    assert capsys.readouterr().out == first
    assert json.loads(first)["states"] == 20


def test_probe_csv_output(settings, tmp_path, capsys):
    out = tmp_path / "hist.csv"
    argv = ["probe", "--seed", "1", "--steps", "1000", "--every", "100", "--L", "2", "--format", "csv",
            "--output", str(out), *settings]
    assert main(argv) == 0
    assert out.read_text(encoding="utf-8").splitlines()[0] == "length,loops,edges"
    assert _report(capsys)["command"] == "probe"


def test_bound_needs_mn_report(settings, tmp_path, capsys):
    path = tmp_path / "mc.json"
    path.write_text(json.dumps({"parameters": {"estimator": "twopoint"},
                                "estimate": {"mean": 0.1, "stderr": 0.01, "samples": 100, "seed": 1}}),
                    encoding="utf-8")
    assert main(["infrared-bound", "--mc", str(path), *settings]) == 2
    assert "mn" in _report(capsys)["error"]


def test_probe_plot_writes_png(settings, tmp_path, capsys):
    png = tmp_path / "probe.png"
    argv = ["probe", "--seed", "2", "--steps", "500", "--every", "100", "--L", "2", "--plot", str(png), *settings]
    assert main(argv) == 0
    assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
