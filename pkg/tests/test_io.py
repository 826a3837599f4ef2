import json

import numpy as np
from hypothesis import given, strategies as st

from spinclock import __version__
from spinclock.io import RunManifest, complex_matrix_record, fmt, write_csv


def test_fmt_fixed_digits():
    assert fmt(1 / 3) == "0.333333333333"
    assert fmt(-0.0) == "0"
    assert fmt(3) == "3"
    assert fmt(np.float64(0.5)) == "0.5"
    assert fmt(1 + 2j) == "1+2j"
    assert fmt("abc") == "abc"
    assert fmt("01") == "01"
    assert fmt(np.int64(7)) == "7"


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_round_trips_to_12_digits(x):
    y = float(fmt(x))
    assert y == float(f"{x:.12g}")


def test_manifest_lists_outputs(tmp_path):
    m = RunManifest("demo", dict(a=1), seed=5)
    m.add(write_csv(tmp_path / "b.csv", ["x"], [[1.0]]))
    m.add(tmp_path / "a.csv")
    path = m.write(tmp_path)
    rec = json.loads(path.read_text())
    assert path.name == "demo_manifest.json"
    assert rec["version"] == __version__ and rec["seed"] == 5
    assert rec["outputs"] == sorted(rec["outputs"]) and len(rec["outputs"]) == 2


def test_complex_matrix_record():
    rec = complex_matrix_record(np.array([[1, 1j], [0, 2]]))
    assert rec["shape"] == [2, 2]
    assert rec["imag"][0][1] == 1.0
