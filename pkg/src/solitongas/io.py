"""Config parsing and result serialisation.

Tables are CSV with a leading ``# schema=solitongas/1`` comment line; reports
are YAML mappings carrying ``schema_version``. Floats are written with
``repr`` (shortest round-trip form), complex numbers as ``re+imi`` strings.
"""
from __future__ import annotations

import csv
import io
import math
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np
import yaml

from .errors import SolitonGasError

SCHEMA = "solitongas/1"


class ConfigError(SolitonGasError):
    """Malformed configuration or input file."""


def parse_complex(value) -> complex:
    """Accept numbers, ``"1.5"``, ``"2i"``, ``"1-2.5e-3i"``, ``"-i"``."""
    if isinstance(value, (int, float, complex)) and not isinstance(value, bool):
        return complex(value)
    s = str(value).strip().replace(" ", "")
    if not s:
        raise ConfigError("empty complex literal")
    t = s.replace("i", "j")
    if t.endswith("j"):
        head = t[:-1]
        # bare "j", "+j", "-j" and "a+j" need an explicit unit coefficient
        if head == "" or head[-1] in "+-":
            t = head + "1j"
    try:
        return complex(t)
    except ValueError:
        raise ConfigError(f"cannot parse complex number {value!r}") from None


def format_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def format_complex(z: complex) -> str:
    z = complex(z)
    if z.imag == 0:
        return format_float(z.real)
    sign = "-" if math.copysign(1.0, z.imag) < 0 else "+"
    return f"{format_float(z.real)}{sign}{format_float(abs(z.imag))}i"


def parse_complex_list(values) -> np.ndarray:
    if values is None:
        return np.zeros(0, dtype=complex)
    if isinstance(values, str):
        values = [v for v in values.split(",") if v.strip()]
    return np.array([parse_complex(v) for v in values], dtype=complex)


def read_lattice_csv(path) -> np.ndarray:
    """CSV with columns ``x,y`` (header required, ``#`` lines ignored)."""
    with open(path, newline="") as fh:
        rows = [line for line in fh if line.strip() and not line.lstrip().startswith("#")]
    reader = csv.DictReader(rows)
    if reader.fieldnames is None or not {"x", "y"} <= {f.strip() for f in reader.fieldnames}:
        raise ConfigError(f"{path}: lattice CSV needs columns x,y")
    pts = []
    for row in reader:
        row = {k.strip(): v for k, v in row.items()}
        try:
            pts.append(complex(float(row["x"]), float(row["y"])))
        except (TypeError, ValueError):
            raise ConfigError(f"{path}: bad lattice row {row}") from None
    return np.array(pts, dtype=complex)


def write_lattice_csv(path, sites) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema={SCHEMA}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y"])
        for z in np.asarray(sites, dtype=complex):
            w.writerow([format_float(z.real), format_float(z.imag)])


def load_config(path) -> dict:
    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return data


# ------------------------------------------------------------------ tables


def table_text(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    buf = io.StringIO()
    buf.write(f"# schema={SCHEMA}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _cell(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (complex, np.complexfloating)):
        return format_complex(v)
    if isinstance(v, (float, np.floating)):
        return format_float(v)
    return str(v)


def read_table(path_or_text) -> tuple[list[str], list[list[str]]]:
    """Parse a table and check its schema line."""
    text = str(path_or_text)
    if "\n" not in text:
        text = Path(text).read_text()
    lines = text.splitlines()
    if not lines or lines[0].strip() != f"# schema={SCHEMA}":
        raise ConfigError("missing or unknown table schema line")
    rows = list(csv.reader(lines[1:]))
    return rows[0], rows[1:]


# ----------------------------------------------------------------- reports


def to_plain(obj):
    """Convert numpy and complex values into YAML-safe builtins."""
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        z = complex(obj)
        return float(z.real) if z.imag == 0 else format_complex(z)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def report_text(data: dict) -> str:
    body = {"schema_version": SCHEMA}
    body.update(to_plain(data))
    return yaml.safe_dump(body, sort_keys=False, default_flow_style=False)


def read_report(path_or_text) -> dict:
    text = str(path_or_text)
    if "\n" not in text and Path(text).exists():
        text = Path(text).read_text()
    data = yaml.safe_load(text)
    if not isinstance(data, dict) or data.get("schema_version") != SCHEMA:
        raise ConfigError("missing or unknown report schema_version")
    return data
