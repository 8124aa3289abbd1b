import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from solitongas import io as sio

reals = st.floats(allow_nan=False, allow_infinity=False, width=64)


@pytest.mark.parametrize("text,want", [
    ("1.5", 1.5), ("2i", 2j), ("-i", -1j), ("i", 1j), ("3+i", 3 + 1j), ("1-2.5e-3i", 1 - 2.5e-3j), (" 4 ", 4),
])
def test_parse_complex(text, want):
    assert sio.parse_complex(text) == want


def test_parse_complex_rejects_garbage():
    with pytest.raises(sio.ConfigError):
        sio.parse_complex("1+2k")
    with pytest.raises(sio.ConfigError):
        sio.parse_complex("")


@given(reals, reals)
@settings(max_examples=100)
def test_complex_format_round_trip(x, y):
    z = complex(x, y)
    assert sio.parse_complex(sio.format_complex(z)) == z


def test_lattice_csv_round_trip(tmp_path, rng):
    z = rng.normal(size=7) + 1j * rng.normal(size=7)
    path = tmp_path / "lat.csv"
    sio.write_lattice_csv(path, z)
    assert np.array_equal(sio.read_lattice_csv(path), z)


def test_lattice_csv_needs_columns(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(sio.ConfigError):
        sio.read_lattice_csv(path)


def test_table_round_trip():
    text = sio.table_text(["R", "dev", "z"], [(0.1, 1e-17, 1 + 2j), (0.01, 3.0, True)])
    header, rows = sio.read_table(text)
    assert header == ["R", "dev", "z"]
    assert float(rows[0][1]) == 1e-17
    assert sio.parse_complex(rows[0][2]) == 1 + 2j
    assert rows[1][2] == "true"


def test_report_round_trip():
    data = {"x": np.float64(0.1), "v": np.arange(3), "z": 1 - 1j, "ok": np.bool_(True)}
    back = sio.read_report(sio.report_text(data))
    assert back["schema_version"] == sio.SCHEMA
    assert back["x"] == 0.1 and back["v"] == [0, 1, 2] and back["ok"] is True
    assert sio.parse_complex(back["z"]) == 1 - 1j


def test_schema_is_checked():
    with pytest.raises(sio.ConfigError):
        sio.read_table("R,dev\n1,2\n")
    with pytest.raises(sio.ConfigError):
        sio.read_report("a: 1\nb: 2\n")


def test_config_must_be_mapping(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("- 1\n- 2\n")
    with pytest.raises(sio.ConfigError):
        sio.load_config(path)
