"""Log-likelihood of the coupled Markov chain model, relative to the plain Markov baseline.

For every step t and tendency vector chi the likelihood factorises over
(sector, source class, target class) cells. A move m1 -> m2 contributes

* ``1 + (1 - q) p-/p+``  when chi_{m1} = 1 and m2 <= m1,
* ``1 + (1 - q) p+/p-``  when chi_{m1} = 0 and m2 > m1,
* ``q``                  otherwise,

raised to the number of such moves. These are the conditional move
probabilities divided by the baseline probability p_{m1,m2}.
"""
from __future__ import annotations

import math
from typing import Tuple

import numpy as np  # type: ignore
from scipy.special import logsumexp, xlogy  # type: ignore

from cmc.exceptions import InputError, ModelInconsistencyError
from cmc.model import (
    ModelParams,
    NondeteriorationProbs,
    TransitionMatrix,
    bit_table,
    nondeterioration_probs,
)
from cmc.panel import CountTensor, RatingPanel

# Enumeration limits of the brute-force oracle.
ORACLE_MAX_CLASSES = 4
ORACLE_MAX_COMPANIES = 10
ORACLE_MAX_PERIODS = 6


def _branch_factors(q: np.ndarray, p_plus: NondeteriorationProbs):
    """Per (sector, class) factors for the chi=1 and chi=0 branches; nan where undefined."""
    pp = p_plus.p_plus[None, :]
    pm = p_plus.p_minus[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        f_plus = np.where(pp > 0, 1.0 + (1.0 - q) * pm / pp, np.nan)
        f_minus = np.where(pm > 0, 1.0 + (1.0 - q) * pp / pm, np.nan)
    return f_plus, f_minus


class LikelihoodObjective:
    """Log-likelihood bound to fixed data and transition matrix.

    The count tensor is folded once into per-(step, sector, class) totals of
    non-deteriorating (``down``) and deteriorating (``up``) moves.
    """

    def __init__(self, counts: CountTensor, P: TransitionMatrix):
        if counts.n_classes != P.n_classes:
            raise InputError(f"counts have {counts.n_classes} classes, matrix has {P.n_classes}")
        self.counts = counts
        self.P = P
        self.p_plus = nondeterioration_probs(P)
        M = P.n_classes
        lower = np.tri(M, M + 1, dtype=np.int64)  # m2 <= m1
        self.down = (counts.counts * lower).sum(axis=-1).astype(float)
        self.up = counts.counts.sum(axis=-1).astype(float) - self.down
        # observed moves the baseline chain cannot make, as (source, target)
        observed = counts.counts.sum(axis=(0, 1)) > 0
        self.impossible_moves = np.argwhere(observed & (P.entries[:M] <= 0)) + 1
        self.n_evaluations = 0

    @property
    def n_classes(self) -> int:
        return self.P.n_classes

    @property
    def n_sectors(self) -> int:
        return self.counts.n_sectors

    def step_terms(self, params: ModelParams) -> Tuple[np.ndarray, np.ndarray]:
        """Log of the product over cells per step and chi bitmask, shape (T-1, 2^M).

        Also returns a mask of the entries that would need an undefined branch.
        """
        if params.n_classes != self.n_classes or params.n_sectors != self.n_sectors:
            raise InputError(
                f"parameters are {params.n_classes}x{params.n_sectors}, "
                f"data is {self.n_classes}x{self.n_sectors}"
            )
        q = params.q.entries.T  # (S, M)
        f_plus, f_minus = _branch_factors(q, self.p_plus)

        undefined_one = ((self.down > 0) & np.isnan(f_plus)[None]).any(axis=1)
        undefined_zero = ((self.up > 0) & np.isnan(f_minus)[None]).any(axis=1)
        f_plus = np.nan_to_num(f_plus, nan=1.0)
        f_minus = np.nan_to_num(f_minus, nan=1.0)

        # (T-1, M) log factors for each value of chi_m
        with np.errstate(divide="ignore"):
            log_one = (xlogy(self.down, f_plus) + xlogy(self.up, q)).sum(axis=1)
            log_zero = (xlogy(self.up, f_minus) + xlogy(self.down, q)).sum(axis=1)

        bits = bit_table(self.n_classes)[None] == 1  # (1, 2^M, M)
        terms = np.where(bits, log_one[:, None, :], log_zero[:, None, :]).sum(axis=-1)
        undefined = np.where(bits, undefined_one[:, None, :], undefined_zero[:, None, :]).any(axis=-1)
        return terms, undefined

    def __call__(self, params: ModelParams) -> float:
        self.n_evaluations += 1
        if self.counts.n_steps == 0:
            return 0.0
        if len(self.impossible_moves):
            m1, m2 = self.impossible_moves[0]
            raise ModelInconsistencyError(f"observed move {m1} -> {m2} has probability 0")

        terms, undefined = self.step_terms(params)
        weights = params.chi.probs
        active = weights > 0
        if (undefined[:, active]).any():
            t, k = np.argwhere(undefined & active[None])[0]
            raise ModelInconsistencyError(
                f"step {t + 1}, tendency vector {k}: counts need a branch with zero probability mass"
            )

        with np.errstate(divide="ignore"):
            per_step = logsumexp(terms[:, active], axis=1, b=weights[active])
        return float(per_step.sum())


def log_likelihood(counts: CountTensor, P: TransitionMatrix, params: ModelParams) -> float:
    return LikelihoodObjective(counts, P)(params)


def _move_probability(m1: int, m2: int, q: float, chi_bit: int, P: TransitionMatrix, p_plus):
    p = P.entries[m1 - 1, m2 - 1]
    if chi_bit == 1 and m2 <= m1:
        if p_plus.p_plus[m1 - 1] == 0:
            raise ModelInconsistencyError(f"class {m1} has p+ = 0 but a non-deteriorating move")
        g = p / p_plus.p_plus[m1 - 1]
    elif chi_bit == 0 and m2 > m1:
        if p_plus.p_minus[m1 - 1] == 0:
            raise ModelInconsistencyError(f"class {m1} has p- = 0 but a deteriorating move")
        g = p / p_plus.p_minus[m1 - 1]
    else:
        g = 0.0
    return q * p + (1.0 - q) * g


def log_likelihood_oracle(panel: RatingPanel, P: TransitionMatrix, params: ModelParams) -> float:
    """Brute-force evaluation from the model definition, company by company.

    Only meant for tiny instances; used to check :func:`log_likelihood`.
    """
    M = P.n_classes
    if M > ORACLE_MAX_CLASSES or panel.n_companies > ORACLE_MAX_COMPANIES:
        raise InputError("instance too large for enumeration")
    if len(panel) == 0:
        return 0.0
    first, last = panel.periods
    if last - first + 1 > ORACLE_MAX_PERIODS:
        raise InputError("instance too large for enumeration")

    p_plus = nondeterioration_probs(P)
    q = params.q.entries
    weights = params.chi.probs
    bits = bit_table(M)
    moves = panel.transitions()
    moves = moves[moves["source"] <= M]

    total = 0.0
    for period in range(first, last):
        step = moves[moves["period"] == period]
        mixture = 0.0
        for k in range(2 ** M):
            if weights[k] <= 0:
                continue
            product = 1.0
            for move in step:
                m1, m2, s = int(move["source"]), int(move["target"]), int(move["sector"])
                product *= _move_probability(m1, m2, q[m1 - 1, s - 1], bits[k, m1 - 1], P, p_plus)
            mixture += weights[k] * product
        baseline = 0.0
        for move in step:
            p = P.entries[move["source"] - 1, move["target"] - 1]
            if p <= 0:
                raise ModelInconsistencyError(
                    f"observed move {move['source']} -> {move['target']} has probability 0"
                )
            baseline += math.log(p)
        total += (math.log(mixture) if mixture > 0 else -math.inf) - baseline
    return total
