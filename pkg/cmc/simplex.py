"""Dense two-phase tableau simplex for  opt c.x  s.t.  A x = b, x >= 0.

Entering and leaving variables follow Bland's rule, so degenerate vertices
cannot make the method cycle. Upper bounds are not carried: for the tendency
polytope they follow from nonnegativity and the normalisation row.
"""
from __future__ import annotations

import logging
from typing import List

import numpy as np  # type: ignore

from cmc.exceptions import InfeasibleError, InputError, ModelError
from cmc.method import Sense

log = logging.getLogger(__name__)

PIVOT_TOL = 1e-12
FEASIBILITY_TOL = 1e-9


class Tableau:
    """Constraint rows ``[A | rhs]`` with a reduced-cost row kept separately."""

    def __init__(self, rows: np.ndarray, basis: List[int]):
        self.rows = rows
        self.basis = basis
        self.costs = np.zeros(rows.shape[1])

    @property
    def rhs(self) -> np.ndarray:
        return self.rows[:, -1]

    def price(self, c: np.ndarray) -> None:
        """Set the reduced-cost row for minimising ``c`` over the current basis."""
        n = len(c)
        c_basis = c[self.basis]
        self.costs = np.zeros(self.rows.shape[1])
        self.costs[:n] = c - c_basis @ self.rows[:, :n]
        self.costs[-1] = -c_basis @ self.rhs

    def pivot(self, row: int, col: int) -> None:
        self.rows[row] /= self.rows[row, col]
        for i in range(len(self.rows)):
            if i != row and self.rows[i, col] != 0.0:
                self.rows[i] -= self.rows[i, col] * self.rows[row]
        self.costs -= self.costs[col] * self.rows[row]
        self.basis[row] = col

    def entering(self, n_cols: int) -> int:
        """Lowest-index column with negative reduced cost, or -1 at optimality."""
        candidates = np.flatnonzero(self.costs[:n_cols] < -PIVOT_TOL)
        return int(candidates[0]) if len(candidates) else -1

    def leaving(self, col: int) -> int:
        """Minimum-ratio row; ties go to the lowest basic variable index."""
        column = self.rows[:, col]
        best_row, best_ratio = -1, np.inf
        for i in np.flatnonzero(column > PIVOT_TOL):
            ratio = self.rhs[i] / column[i]
            if ratio < best_ratio - PIVOT_TOL or (
                ratio <= best_ratio + PIVOT_TOL and self.basis[i] < self.basis[best_row]
            ):
                best_row, best_ratio = int(i), ratio
        return best_row

    def run(self, n_cols: int, max_pivots: int) -> None:
        for _ in range(max_pivots):
            col = self.entering(n_cols)
            if col < 0:
                return
            row = self.leaving(col)
            if row < 0:
                raise ModelError("linear program is unbounded")
            self.pivot(row, col)
        raise ModelError(f"simplex did not terminate within {max_pivots} pivots")


def solve_standard_form(c, A, b, sense: Sense = Sense.MAX) -> np.ndarray:
    """Return an optimal basic feasible solution (a vertex) of the polytope."""
    c = np.asarray(c, dtype=float)
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    m, n = A.shape
    if c.shape != (n,) or b.shape != (m,):
        raise InputError("objective, matrix and right-hand side shapes disagree")
    if not np.all(np.isfinite(c)):
        raise InputError("objective must be finite")

    flip = b < 0
    A[flip] *= -1
    b[flip] *= -1

    # phase 1: minimise the sum of artificials
    rows = np.hstack([A, np.eye(m), b[:, None]])
    tableau = Tableau(rows, list(range(n, n + m)))
    tableau.price(np.concatenate([np.zeros(n), np.ones(m)]))
    max_pivots = 50 * (n + m)
    tableau.run(n + m, max_pivots)
    if -tableau.costs[-1] > FEASIBILITY_TOL:
        raise InfeasibleError(f"constraints are infeasible (residual {-tableau.costs[-1]:.3g})")

    # drive artificials out of the basis; rows where that fails are redundant
    redundant = []
    for i, var in enumerate(tableau.basis):
        if var < n:
            continue
        candidates = np.flatnonzero(np.abs(tableau.rows[i, :n]) > PIVOT_TOL)
        if len(candidates):
            tableau.pivot(i, int(candidates[0]))
        else:
            redundant.append(i)
    keep = [i for i in range(m) if i not in redundant]
    rows = np.hstack([tableau.rows[keep, :n], tableau.rows[keep, -1:]])
    tableau = Tableau(rows, [tableau.basis[i] for i in keep])

    # phase 2
    tableau.price(-c if sense is Sense.MAX else c)
    tableau.run(n, max_pivots)

    x = np.zeros(n)
    x[tableau.basis] = tableau.rhs
    x[np.abs(x) < PIVOT_TOL] = 0.0
    log.debug("simplex vertex with %d positive components", int((x > 0).sum()))
    return np.clip(x, 0.0, None)
