"""Repeat an estimation under different seeds and measure how far the estimates spread."""
from __future__ import annotations

import json
import logging
from typing import Callable, List, Tuple

import numpy as np  # type: ignore
import pandas as pd  # type: ignore
from rich.console import Console  # type: ignore
from rich.table import Table  # type: ignore

from cmc.exceptions import InputError
from cmc.model import ModelParams
from cmc.trace import Trace

log = logging.getLogger(__name__)

STABILITY_COLUMNS = ["seed", "best", "iterations", "final_variance", "final_log10_variance"]

Estimator = Callable[[int], Tuple[ModelParams, Trace]]


class StabilityRun:
    def __init__(self, seed: int, params: ModelParams, trace: Trace):
        self.seed = seed
        self.params = params
        self.trace = trace

    def as_row(self) -> list:
        last = self.trace.last
        return [self.seed, last.best, last.iteration, last.variance, last.log10_variance]


class StabilityReport:
    """Per-run summaries plus the largest entrywise spread of Q and P_chi over all runs."""

    def __init__(self, runs: List[StabilityRun]):
        if not runs:
            raise InputError("stability report needs at least one run")
        self.runs = runs
        q = np.stack([r.params.q.entries for r in runs])
        chi = np.stack([r.params.chi.probs for r in runs])
        # max |x_r - x_r'| over pairs of runs is max - min
        self.q_spread = q.max(axis=0) - q.min(axis=0)
        self.chi_spread = chi.max(axis=0) - chi.min(axis=0)

    @property
    def max_q_difference(self) -> float:
        return float(self.q_spread.max())

    @property
    def max_chi_difference(self) -> float:
        return float(self.chi_spread.max())

    @property
    def mean_final_log10_variance(self) -> float:
        return float(np.mean([r.trace.last.log10_variance for r in self.runs]))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([r.as_row() for r in self.runs], columns=STABILITY_COLUMNS)

    def document(self) -> dict:
        return {
            "runs": len(self.runs),
            "seeds": [r.seed for r in self.runs],
            "max_q_difference": self.max_q_difference,
            "max_chi_difference": self.max_chi_difference,
            "q_differences": [float(x) for x in self.q_spread.ravel()],
            "chi_differences": [float(x) for x in self.chi_spread],
            "mean_final_log10_variance": self.mean_final_log10_variance,
        }

    def write(self, csv_filename: str, json_filename: str) -> None:
        self.to_frame().to_csv(csv_filename, index=False, float_format="%.17g")
        with open(json_filename, "w") as f:
            json.dump(self.document(), f, indent=2, sort_keys=True)
            f.write("\n")

    def render(self, console: Console) -> None:
        table = Table(title=f"Stability over {len(self.runs)} runs")
        for column in ("seed", "best L", "iterations", "log10 var"):
            table.add_column(column, justify="right")
        for run in self.runs:
            last = run.trace.last
            table.add_row(str(run.seed), f"{last.best:.6f}", str(last.iteration), f"{last.log10_variance:.3f}")
        console.print(table)
        console.print(f"max |dQ| = {self.max_q_difference:.6g}, max |dP_chi| = {self.max_chi_difference:.6g}")


def run_stability(estimator: Estimator, seed: int, runs: int) -> StabilityReport:
    """Call ``estimator`` with seeds seed, seed+1, ..., seed+runs-1."""
    if runs < 1:
        raise InputError("stability driver needs runs >= 1")
    results = []
    for k in range(runs):
        params, trace = estimator(seed + k)
        log.info("stability run %d/%d (seed %d): best %.6g", k + 1, runs, seed + k, trace.last.best)
        results.append(StabilityRun(seed + k, params, trace))
    return StabilityReport(results)
