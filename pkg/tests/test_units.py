import numpy as np
import pytest

from core.settings import ModelOptions
from utils.output import format_float, render_csv, write_csv
from utils.units import format_quantity, parse_quantity, unit_kind


@pytest.mark.parametrize("text, kind, expected", [
    ("6 GHz", "frequency", 6000.0),
    ("600 kHz", "frequency", 0.6),
    ("0.25 fF", "capacitance", 0.25e-15),
    ("10 us", "time", 10.0),
    ("10 µs", "time", 10.0),
    ("21.75 nm", "length", 21.75e-9),
    ("-0.1 V", "voltage", -0.1),
    ("1e-18 kg", "mass", 1e-18),
    ("1e4", "dimensionless", 1e4),
])
def test_parse_quantity(text, kind, expected):
    assert parse_quantity(text, kind) == pytest.approx(expected)


@pytest.mark.parametrize("text, kind", [
    ("1 GHz", "time"),
    ("500", "frequency"),
    ("fast", "frequency"),
    ("1 MHz", "charge"),
])
def test_parse_quantity_rejects(text, kind):
    with pytest.raises(ValueError):
        parse_quantity(text, kind)


def test_unit_kind_and_format():
    assert unit_kind("fF") == "capacitance"
    assert unit_kind("furlong") is None
    with pytest.raises(ValueError, match=r"got a time"):
        parse_quantity("500 us", "frequency")
    assert format_quantity(0.6, "frequency") == "0.6 MHz"
    assert parse_quantity(format_quantity(0.36, "frequency"), "frequency") == 0.36
    assert format_quantity(1e4, "dimensionless") == "10000.0"


def test_format_float():
    assert format_float(1.0) == "1.0000000000000000e+00"
    assert format_float(np.float64(-0.375)) == "-3.7500000000000000e-01"
    assert format_float(3) == "3"
    assert format_float(np.int64(3)) == "3"
    assert format_float(None) == ""
    assert format_float(True) == "true"
    assert format_float(float("nan")) == "nan"
    assert format_float("ok") == "ok"


def test_csv_uses_lf(tmp_path):
    text = render_csv(["a", "b"], [[1.0, "x"], [2, None]])
    assert "\r" not in text
    assert text.splitlines() == ["a,b", "1.0000000000000000e+00,x", "2,"]
    path = write_csv(tmp_path / "sub" / "t.csv", ["a"], [[0.5]])
    assert path.read_bytes() == b"a\n5.0000000000000000e-01\n"
    assert [p.name for p in path.parent.iterdir()] == ["t.csv"]


def test_model_options_validation():
    assert ModelOptions().alpha_convention == "paper"
    with pytest.raises(ValueError, match="alpha_convention"):
        ModelOptions(alpha_convention="other")
    with pytest.raises(ValueError):
        ModelOptions(dispersive_threshold=1.5)
