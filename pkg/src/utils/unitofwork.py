import csv
import shutil
import tempfile
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Iterable, Sequence

import matplotlib
import numpy as np
from matplotlib.figure import Figure
from pydantic import BaseModel

from src.core.config.logger import logger
from src.models.experiments import CountRecord
from src.schemas.results import FitResult


class ABCUnitOfWork(ABC):
    @abstractmethod
    def __enter__(self) -> "ABCUnitOfWork":
        raise NotImplementedError

    @abstractmethod
    def __exit__(self, *args: Any) -> None:
        raise NotImplementedError

    @abstractmethod
    def commit(self): ...

    @abstractmethod
    def rollback(self): ...


class ResultsUnitOfWork(ABCUnitOfWork):
    """
    Stages experiment outputs in a temporary directory inside ``out`` and moves them into place together.

    Leaving the block normally commits; an exception rolls the staged files back and is re-raised.
    """

    def __init__(self, out: Path) -> None:
        self.out = Path(out)
        self.staging: Path | None = None
        self.written: list[str] = []

    def __enter__(self) -> "ResultsUnitOfWork":
        self.out.mkdir(parents=True, exist_ok=True)
        self.staging = Path(tempfile.mkdtemp(prefix=".staging-", dir=self.out))
        self.written = []
        return self

    def __exit__(self, exc_type: Any, exc: Any, tb: Any) -> None:
        if exc_type:
            logger.debug("Experiment failed. Rolling back staged outputs.")
            self.rollback()
        else:
            logger.debug("Experiment succeeded. Committing outputs.")
            self.commit()

    def _target(self, name: str) -> Path:
        if self.staging is None:
            raise RuntimeError("the unit of work is not open")
        self.written.append(name)
        return self.staging / name

    def write_json(self, name: str, model: BaseModel) -> None:
        self._target(name).write_text(model.model_dump_json(indent=2) + "\n", encoding="utf-8")

    def write_csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
        with open(self._target(name), "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])

    def write_series(self, record: CountRecord) -> None:
        """results.csv with columns T, N, logN; logN is empty where N = 0."""
        rows = (
            (float(t), int(n), float(np.log(n)) if n > 0 else "") for t, n in zip(record.t, record.n)
        )
        self.write_csv("results.csv", ["T", "N", "logN"], rows)

    def write_scatter(self, record: CountRecord, fit: FitResult | None = None) -> None:
        """scatter.svg of (T, log N) with the fitted curve over its window."""
        positive = record.n > 0
        figure = Figure(figsize=(6, 4))
        axes = figure.subplots()
        axes.scatter(record.t[positive], np.log(record.n[positive]), s=6, color="tab:blue")
        if fit is not None:
            t = np.linspace(fit.t_lo, fit.t_hi, 200)
            axes.plot(t, fit.delta * t + fit.beta * np.log(t) + fit.c, color="tab:red", linewidth=1)
        axes.set_xlabel("T")
        axes.set_ylabel("log N(T)")
        figure.tight_layout()
        with matplotlib.rc_context({"svg.hashsalt": "anosov-counting"}):
            figure.savefig(self._target("scatter.svg"), format="svg", metadata={"Date": None})

    def commit(self) -> None:
        if self.staging is None:
            return
        for name in self.written:
            (self.staging / name).replace(self.out / name)
        shutil.rmtree(self.staging, ignore_errors=True)
        logger.info(f"Wrote {', '.join(self.written) or 'nothing'} to {self.out}")
        self.staging = None

    def rollback(self) -> None:
        if self.staging is not None:
            shutil.rmtree(self.staging, ignore_errors=True)
        self.staging = None
        self.written = []
