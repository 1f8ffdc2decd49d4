import csv
import json

import numpy as np
import pytest

from src.models.experiments import CountRecord
from src.schemas.results import FitResult
from src.utils.unitofwork import ResultsUnitOfWork


@pytest.fixture
def record() -> CountRecord:
    t = np.arange(0.0, 1.05, 0.1)
    return CountRecord(t, np.array([0, 0, 1, 1, 2, 3, 5, 8, 13, 21, 34]), {"depth": 4})


@pytest.fixture
def fit() -> FitResult:
    return FitResult(
        delta=4.0, beta=0.0, c=-0.5, t_lo=0.3, t_hi=1.0, residual_rms=0.1,
        stderr_delta=0.2, stderr_c=0.1, beta_frozen=True, points=8,
    )


def test_commit_moves_outputs_into_place(tmp_path, record, fit):
    out = tmp_path / "out"
    with ResultsUnitOfWork(out) as uow:
        uow.write_series(record)
        uow.write_json("summary.json", fit)
        uow.write_scatter(record, fit)
    assert sorted(p.name for p in out.iterdir()) == ["results.csv", "scatter.svg", "summary.json"]
    assert json.loads((out / "summary.json").read_text())["delta"] == 4.0


def test_series_columns(tmp_path, record):
    with ResultsUnitOfWork(tmp_path) as uow:
        uow.write_series(record)
    with open(tmp_path / "results.csv", newline="") as handle:
        rows = list(csv.reader(handle))
    assert rows[0] == ["T", "N", "logN"]
    assert len(rows) == len(record) + 1
    assert rows[1][1] == "0" and rows[1][2] == ""
    assert float(rows[-1][0]) == pytest.approx(1.0)
    assert rows[-1][1] == "34"
    assert float(rows[-1][2]) == pytest.approx(np.log(34))


def test_floats_are_written_exactly(tmp_path):
    value = 0.1 + 0.2
    with ResultsUnitOfWork(tmp_path) as uow:
        uow.write_csv("x.csv", ["v", "label"], [(np.float64(value), "a")])
    row = (tmp_path / "x.csv").read_text().splitlines()[1]
    assert float(row.split(",")[0]) == value


def test_scatter_is_deterministic(tmp_path, record, fit):
    for name in ("one", "two"):
        with ResultsUnitOfWork(tmp_path / name) as uow:
            uow.write_scatter(record, fit)
    assert (tmp_path / "one" / "scatter.svg").read_bytes() == (tmp_path / "two" / "scatter.svg").read_bytes()


def test_failure_rolls_back(tmp_path, record):
    out = tmp_path / "out"
    with pytest.raises(ValueError):
        with ResultsUnitOfWork(out) as uow:
            uow.write_series(record)
            raise ValueError("boom")
    assert list(out.iterdir()) == []


def test_writing_outside_the_block():
    with pytest.raises(RuntimeError):
        ResultsUnitOfWork("unused").write_csv("x.csv", ["a"], [])
