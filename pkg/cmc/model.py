"""Parameter types of the coupled Markov chain rating model.

Rating classes are numbered 1..M+1 with M+1 the absorbing default class.
Arrays are stored 0-based: row ``m - 1`` of a transition matrix holds class m.

A tendency vector chi in {0,1}^M is encoded as the bitmask k with
bit i-1 of k equal to chi_i, so chi_1 is the least-significant bit.
"""
from __future__ import annotations

from functools import lru_cache
from typing import Sequence

import numpy as np  # type: ignore

from cmc.exceptions import InputError

# Input matrices are published with rounded rows; internal checks stay tight.
ROW_TOL = 5e-3
EQ_TOL = 1e-9


def _frozen(values) -> np.ndarray:
    array = np.array(values, dtype=float)
    array.setflags(write=False)
    return array


@lru_cache(maxsize=None)
def bit_table(n_classes: int) -> np.ndarray:
    """Return the (2^M, M) 0/1 table whose row k decodes bitmask k."""
    k = np.arange(2 ** n_classes)[:, None]
    bits = (k >> np.arange(n_classes)[None, :]) & 1
    bits.setflags(write=False)
    return bits


def decode_bits(k: int, n_classes: int) -> np.ndarray:
    return bit_table(n_classes)[k].copy()


def encode_bits(bits: Sequence[int]) -> int:
    return int(sum(int(b) << i for i, b in enumerate(bits)))


class TransitionMatrix:
    """Row-stochastic (M+1)x(M+1) rating transition matrix with absorbing default."""

    def __init__(self, entries: np.ndarray):
        self._entries = _frozen(entries)

    @property
    def entries(self) -> np.ndarray:
        return self._entries

    @property
    def n_classes(self) -> int:
        """M, the number of non-default classes."""
        return self._entries.shape[0] - 1

    @property
    def default_class(self) -> int:
        return self._entries.shape[0]

    def row(self, m: int) -> np.ndarray:
        return self._entries[m - 1]

    def __repr__(self) -> str:
        return f"TransitionMatrix(M={self.n_classes})"


def validate_transition_matrix(raw) -> TransitionMatrix:
    """Check a raw matrix, renormalise its rows and enforce the absorbing default row."""
    matrix = np.array(raw, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise InputError(f"transition matrix must be square, got shape {matrix.shape}")
    size = matrix.shape[0]
    if size < 2:
        raise InputError("transition matrix needs at least one non-default class")
    if not np.all(np.isfinite(matrix)):
        raise InputError("transition matrix has non-finite entries")

    low = np.argwhere(matrix < -EQ_TOL)
    high = np.argwhere(matrix > 1 + EQ_TOL)
    if len(low) or len(high):
        i, j = (low if len(low) else high)[0]
        raise InputError(f"entry ({i + 1},{j + 1}) = {matrix[i, j]} is not a probability")

    sums = matrix.sum(axis=1)
    bad_rows = np.flatnonzero(np.abs(sums - 1.0) > ROW_TOL)
    if len(bad_rows):
        r = bad_rows[0]
        raise InputError(f"row {r + 1} sums to {sums[r]:.6g}, not 1")

    absorbing = np.zeros(size)
    absorbing[-1] = 1.0
    if np.abs(matrix[-1] - absorbing).max() > ROW_TOL:
        raise InputError(f"row {size} must be the absorbing default row")

    matrix = np.clip(matrix, 0.0, 1.0)
    matrix = matrix / matrix.sum(axis=1, keepdims=True)
    matrix[-1] = absorbing
    return TransitionMatrix(matrix)


class NondeteriorationProbs:
    """Per-class probabilities p+ of moving to a class no worse than the current one."""

    def __init__(self, p_plus):
        p_plus = np.array(p_plus, dtype=float)
        if p_plus.ndim != 1 or len(p_plus) < 1:
            raise InputError("p_plus must be a non-empty vector")
        if np.any(p_plus < -EQ_TOL) or np.any(p_plus > 1 + EQ_TOL):
            raise InputError("p_plus entries must lie in [0, 1]")
        p_plus = np.clip(p_plus, 0.0, 1.0)
        self._p_plus = _frozen(p_plus)
        self._p_minus = _frozen(1.0 - p_plus)

    @property
    def p_plus(self) -> np.ndarray:
        return self._p_plus

    @property
    def p_minus(self) -> np.ndarray:
        return self._p_minus

    @property
    def n_classes(self) -> int:
        return len(self._p_plus)


def nondeterioration_probs(P: TransitionMatrix) -> NondeteriorationProbs:
    M = P.n_classes
    body = P.entries[:M, :M]
    return NondeteriorationProbs(np.tril(body).sum(axis=1))


class QMatrix:
    """M x S idiosyncratic switching probabilities q[m, s]."""

    def __init__(self, entries):
        entries = np.array(entries, dtype=float)
        if entries.ndim != 2 or 0 in entries.shape:
            raise InputError(f"Q must be a non-empty M x S matrix, got shape {entries.shape}")
        if not np.all(np.isfinite(entries)):
            raise InputError("Q has non-finite entries")
        if np.any(entries < -EQ_TOL) or np.any(entries > 1 + EQ_TOL):
            raise InputError("Q entries must lie in [0, 1]")
        self._entries = _frozen(np.clip(entries, 0.0, 1.0))

    @property
    def entries(self) -> np.ndarray:
        return self._entries

    @property
    def n_classes(self) -> int:
        return self._entries.shape[0]

    @property
    def n_sectors(self) -> int:
        return self._entries.shape[1]


class ChiDistribution:
    """Joint law of the tendency vector, a probability vector of length 2^M."""

    def __init__(self, probs):
        probs = np.array(probs, dtype=float)
        size = len(probs)
        if probs.ndim != 1 or size < 2 or size & (size - 1):
            raise InputError(f"chi distribution needs 2^M entries, got {size}")
        self._probs = _frozen(probs)

    @property
    def probs(self) -> np.ndarray:
        return self._probs

    @property
    def n_classes(self) -> int:
        return len(self._probs).bit_length() - 1

    def marginals(self) -> np.ndarray:
        """P(chi_i = 1) for i = 1..M."""
        return self._probs @ bit_table(self.n_classes)

    def violation(self, p_plus: NondeteriorationProbs) -> float:
        """Largest violation of nonnegativity, normalisation and the marginal equalities."""
        negative = max(0.0, -float(self._probs.min()))
        total = abs(float(self._probs.sum()) - 1.0)
        marginal = float(np.abs(self.marginals() - p_plus.p_plus).max())
        return max(negative, total, marginal)

    def is_feasible(self, p_plus: NondeteriorationProbs, tol: float = EQ_TOL) -> bool:
        return self.n_classes == p_plus.n_classes and self.violation(p_plus) <= tol


def validate_chi(probs, p_plus: NondeteriorationProbs, tol: float = EQ_TOL) -> ChiDistribution:
    chi = ChiDistribution(probs)
    if chi.n_classes != p_plus.n_classes:
        raise InputError(f"chi has {chi.n_classes} classes, matrix has {p_plus.n_classes}")
    gap = chi.violation(p_plus)
    if gap > tol:
        raise InputError(f"chi distribution violates its constraints by {gap:.3g}")
    return chi


def independent_chi(p_plus: NondeteriorationProbs) -> ChiDistribution:
    """The product law with the prescribed marginals, always feasible."""
    bits = bit_table(p_plus.n_classes)
    weights = np.where(bits == 1, p_plus.p_plus, p_plus.p_minus)
    return ChiDistribution(weights.prod(axis=1))


class ModelParams:
    """Decision variables (Q, P_chi) of the likelihood maximisation."""

    def __init__(self, q: QMatrix, chi: ChiDistribution):
        if q.n_classes != chi.n_classes:
            raise InputError(f"Q has {q.n_classes} classes, chi has {chi.n_classes}")
        self.q = q
        self.chi = chi

    @property
    def n_classes(self) -> int:
        return self.q.n_classes

    @property
    def n_sectors(self) -> int:
        return self.q.n_sectors

    def to_vector(self) -> np.ndarray:
        """Q block (row-major) followed by the chi block in bitmask order."""
        return np.concatenate([self.q.entries.ravel(), self.chi.probs])

    @classmethod
    def from_vector(cls, vector: np.ndarray, n_classes: int, n_sectors: int) -> ModelParams:
        split = n_classes * n_sectors
        q = QMatrix(np.asarray(vector[:split]).reshape(n_classes, n_sectors))
        return cls(q, ChiDistribution(np.asarray(vector[split:])))

    def is_feasible(self, p_plus: NondeteriorationProbs, tol: float = EQ_TOL) -> bool:
        q = self.q.entries
        return bool(q.min() >= -tol and q.max() <= 1 + tol) and self.chi.is_feasible(p_plus, tol)
