import json

import numpy as np
import pandas as pd
import pytest

from conftest import data_path
from exceptions import InsufficientDataError, ValidationError
from models import QuoteKind
from utils import io_utils


def test_load_params_from_data_file():
    params = io_utils.load_params(data_path("params_10y10y_lambda1.json"))
    assert params.lam == 1.0
    assert params.mean == pytest.approx(0.030673, abs=1e-15)


def test_load_quotes():
    forward, expiry, quotes = io_utils.load_quotes(data_path("quotes_flat.json"))
    assert (forward, expiry) == (0.03, 1.0)
    assert [q.strike_offset for q in quotes] == [-0.01, 0.0, 0.01]
    assert all(q.kind == QuoteKind.NORMAL_VOL for q in quotes)


def test_load_quotes_errors(tmp_path):
    path = tmp_path / "q.json"
    path.write_text(json.dumps({"quotes": [{"offset": 0.0, "value": 0.01}]}))
    with pytest.raises(ValidationError):
        io_utils.load_quotes(str(path))
    path.write_text("[1, 2]")
    with pytest.raises(ValidationError):
        io_utils.load_quotes(str(path))
    path.write_text("{not json")
    with pytest.raises(ValidationError):
        io_utils.load_quotes(str(path))


def test_load_returns_with_header(tmp_path):
    path = tmp_path / "r.csv"
    path.write_text("return\n0.5\n-1.25\n\n2.0\n")
    np.testing.assert_array_equal(io_utils.load_returns(str(path)), [0.5, -1.25, 2.0])


def test_load_returns_from_levels(tmp_path):
    path = tmp_path / "levels.csv"
    path.write_text("100\n101\n99.99\n")
    returns = io_utils.load_returns(str(path), levels=True)
    np.testing.assert_allclose(returns, [1.0, -1.0], rtol=1e-12)


def test_load_returns_errors(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("1.0\nabc\n2.0\n")
    with pytest.raises(ValidationError):
        io_utils.load_returns(str(path))
    path.write_text("")
    with pytest.raises(InsufficientDataError):
        io_utils.load_returns(str(path))
    path.write_text("100\n0\n")
    with pytest.raises(ValidationError):
        io_utils.load_returns(str(path), levels=True)
    with pytest.raises(ValidationError):
        io_utils.load_returns(str(tmp_path / "absent.csv"))


def test_parse_float_list():
    assert io_utils.parse_float_list("-0.01, 0,0.02", "strikes") == [-0.01, 0.0, 0.02]
    for text in ("", "a,b", "1,inf"):
        with pytest.raises(ValidationError):
            io_utils.parse_float_list(text, "strikes")


def test_json_output_is_clean():
    text = io_utils.to_text({"a": np.float64(0.1), "b": float("nan"), "c": [np.int64(3)]}, "json")
    assert json.loads(text) == {"a": 0.1, "b": None, "c": [3]}


def test_frame_output():
    frame = pd.DataFrame({"p": [0.05], "var": [1.0 / 3.0]})
    rows = json.loads(io_utils.to_text(frame, "json"))["rows"]
    assert rows == [{"p": 0.05, "var": 1.0 / 3.0}]
    csv_text = io_utils.to_text(frame, "csv")
    assert csv_text.splitlines()[0] == "p,var"
    assert float(csv_text.splitlines()[1].split(",")[1]) == 1.0 / 3.0


def test_write_output_to_file(tmp_path):
    path = tmp_path / "out.json"
    io_utils.write_output({"x": 1}, "json", str(path))
    assert json.loads(path.read_text()) == {"x": 1}


@pytest.mark.parametrize("value", [0.1 + 0.2, 1.0 / 3.0, 2.0 ** -52, 9.083e-3, 1e300, -5.309])
def test_floats_parse_back_exactly(value):
    from_json = json.loads(io_utils.to_text({"v": np.float64(value)}, "json"))["v"]
    assert from_json == value
    number = io_utils.to_text({"v": value}, "json").split(":")[1].strip().rstrip("}").strip()
    assert len(number.lstrip("-").replace(".", "").split("e")[0].lstrip("0")) <= 17
    csv_text = io_utils.to_text(pd.DataFrame({"v": [value]}), "csv")
    assert float(csv_text.splitlines()[1]) == value
