import json

import numpy as np
import pandas as pd
import pytest

from bohmlab.errors import ConfigError
from bohmlab.export import (
    fields_frame,
    json_safe,
    read_fields,
    report_rows,
    write_fields,
    write_json,
    write_reports,
    write_snapshots,
    write_table,
)
from bohmlab.numerics import Grid
from bohmlab.polar import ResidualReport
from bohmlab.propagate import Snapshots


@pytest.fixture
def grid():
    return Grid(0.0, 1.0, 8, 0.0, 1.0, 8)


@pytest.fixture
def fields(grid):
    xx, tt = grid.mesh()
    amplitude = xx + tt
    amplitude[0, 0] = np.nan
    return {"A": amplitude, "V": xx ** 2}


def test_json_safe():
    data = {"a": np.float64(1.5), "b": float("nan"), "c": np.array([1.0, np.inf]), "d": np.int64(3), "e": np.bool_(True)}
    assert json_safe(data) == {"a": 1.5, "b": None, "c": [1.0, None], "d": 3, "e": True}


def test_fields_frame_is_t_major(grid, fields):
    frame = fields_frame(fields, grid)
    assert list(frame.columns) == ["x", "t", "A", "V"]
    assert len(frame) == 64
    assert frame["t"].iloc[7] == 0.0
    assert frame["t"].iloc[8] == pytest.approx(grid.t[1])


def test_fields_frame_shape_check(grid):
    with pytest.raises(ConfigError, match="shape"):
        fields_frame({"A": np.zeros((3, 3))}, grid)


def test_write_fields_csv_with_sidecar(tmp_path, grid, fields):
    csv_path, sidecar = write_fields(fields, grid, {"family": "plane_wave"}, tmp_path, "plane_wave")
    assert csv_path.suffix == ".csv"
    frame = read_fields(csv_path)
    assert np.isnan(frame["A"].iloc[0])
    assert frame["V"].iloc[-1] == pytest.approx(1.0)
    header = json.loads(sidecar.read_text())
    assert header["family"] == "plane_wave"
    assert header["columns"] == ["x", "t", "A", "V"]
    assert header["grid"]["nx"] == 8


def test_write_fields_json_uses_null(tmp_path, grid, fields):
    (path,) = write_fields(fields, grid, {"family": "plane_wave"}, tmp_path / "nested", "pw", fmt="json")
    document = json.loads(path.read_text())
    assert document["fields"]["A"][0][0] is None
    assert len(document["fields"]["V"]) == 8


def test_write_fields_rejects_format(tmp_path, grid, fields):
    with pytest.raises(ConfigError, match="format"):
        write_fields(fields, grid, {}, tmp_path, "x", fmt="hdf5")


def test_report_rows(tmp_path):
    report = ResidualReport("continuity", 1e-9, 1e-10, {"nx": 8}, 0.0, order=2.01)
    rows = report_rows([report], {"continuity": True})
    assert rows[0]["passed"] is True
    assert rows[0]["order"] == 2.01
    assert "passed" not in report_rows([report])[0]
    path = write_reports(rows, tmp_path / "reports.json")
    assert json.loads(path.read_text())[0]["name"] == "continuity"


def test_write_table(tmp_path):
    frame = pd.DataFrame({"beta": [1.0, 2.0], "acceleration": [0.5, float("nan")]})
    csv_path = write_table(frame, tmp_path / "sweep", "csv")
    assert csv_path.name == "sweep.csv"
    assert pd.read_csv(csv_path)["beta"].tolist() == [1.0, 2.0]
    json_path = write_table(frame, tmp_path / "sweep", "json")
    assert json.loads(json_path.read_text()) == [
        {"beta": 1.0, "acceleration": 0.5},
        {"beta": 2.0, "acceleration": None},
    ]


def test_write_snapshots(tmp_path):
    x = np.linspace(0.0, 1.0, 4, endpoint=False)
    psi = np.array([np.exp(1j * x), np.exp(2j * x)])
    snapshots = Snapshots(np.array([0.0, 0.5]), x, psi)
    csv_path = write_snapshots(snapshots, tmp_path / "snap")
    frame = pd.read_csv(csv_path)
    assert list(frame.columns) == ["t", "x", "re", "im"]
    assert frame["im"].iloc[5] == pytest.approx(np.sin(2 * x[1]))
    document = json.loads(write_snapshots(snapshots, tmp_path / "snap", "json").read_text())
    assert [s["t"] for s in document["series"]] == [0.0, 0.5]
    assert document["series"][0]["re"] == pytest.approx(np.cos(x).tolist())


def test_write_json_creates_parents(tmp_path):
    path = write_json({"value": np.float32(0.25)}, tmp_path / "a" / "b.json")
    assert json.loads(path.read_text()) == {"value": 0.25}
