import io
import json
from fractions import Fraction

import numpy as np
import pandas as pd

from models.lattice_model import GHOST, site
from views.report_view import ReportWriter, format_float, render_csv, render_json, to_jsonable


def test_floats_keep_twelve_significant_digits():
    assert format_float(1 / 3) == 0.333333333333
    assert format_float(np.float64(2.5)) == 2.5
    assert format_float(float("inf")) == "inf"


def test_exact_values_carry_their_rational_form():
    assert to_jsonable(Fraction(1, 3)) == {"exact": "1/3", "value": 0.333333333333}
    assert to_jsonable(Fraction(4)) == {"exact": "4/1", "value": 4.0}


def test_sites_and_pair_keys():
    assert to_jsonable(site(0, 1, 0)) == "(0,1,0)"
    assert to_jsonable(GHOST) == "δ"
    assert to_jsonable({(site(0), site(1)): 2}) == {"(0,0,0)->(1,0,0)": 2}
    assert to_jsonable({site(0), GHOST}) == sorted([repr(site(0)), repr(GHOST)])


def test_frames_and_arrays():
    frame = pd.DataFrame({"r": [0, 1], "G": [1.5, 0.5]})
    assert to_jsonable(frame) == [{"r": 0, "G": 1.5}, {"r": 1, "G": 0.5}]
    assert to_jsonable(np.arange(3)) == [0, 1, 2]
    assert to_jsonable(np.bool_(True)) is True


def test_json_envelope_keeps_insertion_order():
    text = render_json({"command": "oracle", "status": "pass", "Z": 1.0})
    assert list(json.loads(text)) == ["schema", "command", "status", "Z"]
    assert json.loads(text)["schema"] == 1
    assert text.endswith("\n")


def test_csv_rendering():
    text = render_csv(pd.DataFrame({"length": [2, 4], "fraction": [0.5, 1.0]}))
    assert text.splitlines() == ["length,fraction", "2,0.5", "4,1"]


def test_writer_targets(tmp_path):
    stream = io.StringIO()
    ReportWriter(stream=stream).write({"command": "x"})
    assert json.loads(stream.getvalue())["command"] == "x"

    path = tmp_path / "table.csv"
    stream = io.StringIO()
    ReportWriter(str(path), "csv", stream).write({"command": "x"}, pd.DataFrame({"a": [1]}))
    assert path.read_text(encoding="utf-8") == "a\n1\n"
    assert json.loads(stream.getvalue())["command"] == "x"

    stream = io.StringIO()
    ReportWriter(None, "csv", stream).write({"command": "x"})
    assert json.loads(stream.getvalue())["schema"] == 1
