from __future__ import annotations

import math
from typing import Iterable, List

import numpy as np  # type: ignore
import pandas as pd  # type: ignore

TRACE_COLUMNS = ["iteration", "best", "mean", "variance", "log10_variance"]


class TraceRecord:
    def __init__(self, iteration: int, best: float, mean: float, variance: float):
        self.iteration = iteration
        self.best = best
        self.mean = mean
        self.variance = variance

    @property
    def log10_variance(self) -> float:
        """Base-10 log of the population variance, the scale the variance is usually plotted on."""
        if self.variance <= 0:
            return -math.inf
        return math.log10(self.variance)

    def as_row(self) -> list:
        return [self.iteration, self.best, self.mean, self.variance, self.log10_variance]


def population_stats(values: Iterable[float]):
    """Mean and sample variance of objective values; -inf members give (-inf, inf)."""
    values = np.asarray(list(values), dtype=float)
    if not np.all(np.isfinite(values)):
        return -math.inf, math.inf
    if len(values) < 2:
        return float(values.mean()), 0.0
    return float(values.mean()), float(values.var(ddof=1))


class Trace:
    """Per-iteration diagnostics of one optimisation run."""

    def __init__(self) -> None:
        self.records: List[TraceRecord] = []

    def add_record(self, iteration: int, best: float, values: Iterable[float]) -> TraceRecord:
        mean, variance = population_stats(values)
        record = TraceRecord(iteration, best, mean, variance)
        self.records.append(record)
        return record

    def __len__(self) -> int:
        return len(self.records)

    def __getitem__(self, i: int) -> TraceRecord:
        return self.records[i]

    @property
    def last(self) -> TraceRecord:
        return self.records[-1]

    @property
    def best_values(self) -> np.ndarray:
        return np.array([r.best for r in self.records])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([r.as_row() for r in self.records], columns=TRACE_COLUMNS)

    def write_csv(self, filename: str) -> None:
        self.to_frame().to_csv(filename, index=False, float_format="%.17g")
