from __future__ import annotations

from typing import Iterable, Optional, Tuple

import numpy as np  # type: ignore

from cmc.exceptions import InputError
from cmc.model import TransitionMatrix, validate_transition_matrix

# One rating observation per row.
COMPANY_ID_LENGTH = 64

observation_dt = np.dtype(
    [
        ("company", f"U{COMPANY_ID_LENGTH}"),  # Opaque company token.
        ("sector", np.int32),  # 1..S
        ("period", np.int32),  # Year or other integer period label.
        ("rating", np.int32),  # 1..M+1, M+1 is default.
    ]
)


def _whole(value, field: str) -> int:
    try:
        number = int(value)
    except (TypeError, ValueError, OverflowError) as e:
        raise InputError(f"{field} {value!r} is not an integer") from e
    if number != value and not isinstance(value, str):
        raise InputError(f"{field} {value!r} is not an integer")
    return number


def _company(value) -> str:
    company = str(value)
    if len(company) > COMPANY_ID_LENGTH:
        raise InputError(f"company id {company[:20]}... is longer than {COMPANY_ID_LENGTH} characters")
    return company


def new_observations(records: Iterable[Tuple[str, int, int, int]]) -> np.ndarray:
    """Helper for building an observation array from (company, sector, period, rating) tuples."""
    rows = [
        (_company(c), _whole(s, "sector"), _whole(p, "period"), _whole(r, "rating"))
        for c, s, p, r in records
    ]
    return np.array(rows, dtype=observation_dt)


class RatingPanel:
    """Longitudinal rating observations, sorted by company then period.

    Gaps between observed periods are allowed.
    """

    def __init__(self, observations: np.ndarray, default_class: Optional[int] = None):
        observations = np.asarray(observations, dtype=observation_dt)
        order = np.lexsort((observations["period"], observations["company"]))
        self.observations = observations[order]
        self.observations.setflags(write=False)
        self._default_class = default_class
        self._check()

    def _check(self) -> None:
        obs = self.observations
        if len(obs) == 0:
            return
        same = obs["company"][1:] == obs["company"][:-1]

        repeated = same & (obs["period"][1:] == obs["period"][:-1])
        if repeated.any():
            i = np.flatnonzero(repeated)[0]
            raise InputError(
                f"company {obs['company'][i]} observed twice in period {obs['period'][i]}"
            )

        switched = same & (obs["sector"][1:] != obs["sector"][:-1])
        if switched.any():
            i = np.flatnonzero(switched)[0]
            raise InputError(f"company {obs['company'][i]} changes sector")

        if (obs["rating"] < 1).any() or (obs["sector"] < 1).any():
            raise InputError("ratings and sectors are numbered from 1")

        if self._default_class is None:
            return
        default = self._default_class
        revived = same & (obs["rating"][:-1] == default) & (obs["rating"][1:] < default)
        if revived.any():
            i = np.flatnonzero(revived)[0]
            raise InputError(f"company {obs['company'][i]} leaves the default class")

    @property
    def default_class(self) -> int:
        if self._default_class is not None:
            return self._default_class
        return int(self.observations["rating"].max()) if len(self.observations) else 1

    @property
    def n_companies(self) -> int:
        return len(np.unique(self.observations["company"]))

    @property
    def periods(self) -> Tuple[int, int]:
        if len(self.observations) == 0:
            raise InputError("empty panel has no period range")
        return int(self.observations["period"].min()), int(self.observations["period"].max())

    def __len__(self) -> int:
        return len(self.observations)

    def transitions(self) -> np.ndarray:
        """Return a structured array of (sector, period, source, target) moves.

        Only consecutive observed periods of one company produce a move; ``period``
        is the period of the source observation.
        """
        obs = self.observations
        linked = (obs["company"][1:] == obs["company"][:-1]) & (
            obs["period"][1:] - obs["period"][:-1] == 1
        )
        idx = np.flatnonzero(linked)
        moves = np.empty(
            len(idx),
            dtype=[("sector", np.int32), ("period", np.int32), ("source", np.int32), ("target", np.int32)],
        )
        moves["sector"] = obs["sector"][idx]
        moves["period"] = obs["period"][idx]
        moves["source"] = obs["rating"][idx]
        moves["target"] = obs["rating"][idx + 1]
        return moves

    @property
    def gap_count(self) -> int:
        """Number of successive observations of a company that skip at least one period."""
        obs = self.observations
        gaps = (obs["company"][1:] == obs["company"][:-1]) & (
            obs["period"][1:] - obs["period"][:-1] > 1
        )
        return int(gaps.sum())


class CountTensor:
    """Transition counts indexed [t, s, m1, m2] (all 0-based), shape (T-1, S, M, M+1)."""

    def __init__(self, counts: np.ndarray, first_period: int = 1):
        counts = np.array(counts, dtype=np.int64)
        if counts.ndim != 4 or counts.shape[3] != counts.shape[2] + 1:
            raise InputError(f"count tensor must have shape (T-1, S, M, M+1), got {counts.shape}")
        if (counts < 0).any():
            raise InputError("counts must be nonnegative")
        counts.setflags(write=False)
        self.counts = counts
        self.first_period = first_period

    @property
    def n_steps(self) -> int:
        return self.counts.shape[0]

    @property
    def n_sectors(self) -> int:
        return self.counts.shape[1]

    @property
    def n_classes(self) -> int:
        return self.counts.shape[2]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def scaled(self, factor: int) -> CountTensor:
        return CountTensor(self.counts * int(factor), self.first_period)


def count_tensor(
    panel: RatingPanel,
    n_classes: int,
    n_sectors: int,
    periods: Optional[Tuple[int, int]] = None,
) -> CountTensor:
    """Tabulate transitions by step, sector and class pair; moves out of default are dropped."""
    obs = panel.observations
    if len(obs):
        if (obs["rating"] < 1).any() or (obs["rating"] > n_classes + 1).any():
            raise InputError(f"ratings must lie in 1..{n_classes + 1}")
        if (obs["sector"] < 1).any() or (obs["sector"] > n_sectors).any():
            raise InputError(f"sectors must lie in 1..{n_sectors}")

    if periods is None:
        periods = panel.periods if len(obs) else (1, 1)
    first, last = periods
    if last < first:
        raise InputError(f"empty period range {periods}")

    counts = np.zeros((last - first, n_sectors, n_classes, n_classes + 1), dtype=np.int64)
    moves = panel.transitions()
    moves = moves[
        (moves["source"] <= n_classes) & (moves["period"] >= first) & (moves["period"] < last)
    ]
    np.add.at(
        counts,
        (moves["period"] - first, moves["sector"] - 1, moves["source"] - 1, moves["target"] - 1),
        1,
    )
    return CountTensor(counts, first)


def transition_counts(panel: RatingPanel, n_classes: int) -> np.ndarray:
    """M x (M+1) matrix of observed moves out of each non-default class."""
    moves = panel.transitions()
    moves = moves[moves["source"] <= n_classes]
    if len(moves) and moves["target"].max() > n_classes + 1:
        raise InputError(f"ratings must lie in 1..{n_classes + 1}")
    table = np.zeros((n_classes, n_classes + 1), dtype=np.int64)
    np.add.at(table, (moves["source"] - 1, moves["target"] - 1), 1)
    return table


def estimate_transition_matrix(panel: RatingPanel, n_classes: Optional[int] = None) -> TransitionMatrix:
    """Row frequencies of observed one-period moves, with the absorbing default row appended."""
    if len(panel) == 0:
        raise InputError("cannot estimate a transition matrix from an empty panel")
    if n_classes is None:
        n_classes = panel.default_class - 1
    if n_classes < 1:
        raise InputError("panel holds no non-default class")

    table = transition_counts(panel, n_classes)
    outgoing = table.sum(axis=1)
    empty = np.flatnonzero(outgoing == 0)
    if len(empty):
        raise InputError(f"class {empty[0] + 1} has no observed outgoing transitions")

    matrix = np.zeros((n_classes + 1, n_classes + 1))
    matrix[:n_classes] = table / outgoing[:, None]
    matrix[n_classes, n_classes] = 1.0
    return validate_transition_matrix(matrix)
