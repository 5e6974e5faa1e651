"""Monte Carlo scenarios of coupled rating transitions.

In each period one tendency vector chi is drawn and shared by every company.
A company in class m and sector s moves idiosyncratically along row m of P
with probability q[m, s]; otherwise it follows the coupled row selected by
chi_m, which keeps it at or above its class when chi_m = 1 and sends it
below when chi_m = 0. Either way its one-step law is row m of P.
"""
from __future__ import annotations

import hashlib
import logging
from typing import Dict

import numpy as np  # type: ignore

from cmc.exceptions import InputError, ModelInconsistencyError
from cmc.model import (
    ModelParams,
    NondeteriorationProbs,
    TransitionMatrix,
    bit_table,
    nondeterioration_probs,
)
from cmc.panel import RatingPanel, new_observations

log = logging.getLogger(__name__)


class ScenarioBatch:
    """Rating paths of shape (replication, company, period); period 0 holds the initial classes."""

    def __init__(self, paths: np.ndarray, seed: int, digest: str):
        self.paths = paths
        self.metadata = {"seed": seed, "digest": digest}

    @property
    def n_replications(self) -> int:
        return self.paths.shape[0]

    @property
    def n_companies(self) -> int:
        return self.paths.shape[1]

    @property
    def horizon(self) -> int:
        return self.paths.shape[2] - 1


def parameter_digest(P: TransitionMatrix, params: ModelParams) -> str:
    h = hashlib.sha256()
    for array in (P.entries, params.q.entries, params.chi.probs):
        h.update(np.ascontiguousarray(array, dtype=float).tobytes())
    return h.hexdigest()[:16]


def sample_chi_vector(chi, rng: np.random.Generator) -> np.ndarray:
    """Draw a tendency vector; bit i-1 of the drawn index is chi_i."""
    weights = np.clip(chi.probs, 0.0, None)
    cumulative = np.cumsum(weights)
    k = int(np.searchsorted(cumulative, rng.random() * cumulative[-1], side="right"))
    k = min(k, len(weights) - 1)
    return bit_table(chi.n_classes)[k].copy()


def eta_row(P: TransitionMatrix, p_plus: NondeteriorationProbs, m: int, chi_bit: int) -> np.ndarray:
    """Coupled move law of class m: P's row restricted to classes <= m (chi=1) or > m (chi=0)."""
    row = P.row(m)
    out = np.zeros_like(row)
    if chi_bit:
        mass = p_plus.p_plus[m - 1]
        if mass <= 0:
            raise ModelInconsistencyError(f"class {m} has p+ = 0, no non-deteriorating move")
        out[:m] = row[:m] / mass
    else:
        mass = p_plus.p_minus[m - 1]
        if mass <= 0:
            raise ModelInconsistencyError(f"class {m} has p- = 0, no deteriorating move")
        out[m:] = row[m:] / mass
    return out


def _eta_table(P: TransitionMatrix, p_plus: NondeteriorationProbs) -> np.ndarray:
    """(M, 2, M+1) coupled rows indexed [m-1, chi_bit]; nan where the row is undefined."""
    M = P.n_classes
    table = np.full((M, 2, M + 1), np.nan)
    for m in range(1, M + 1):
        for bit in (0, 1):
            try:
                table[m - 1, bit] = eta_row(P, p_plus, m, bit)
            except ModelInconsistencyError:
                pass
    return table


def _draw_rows(rows: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One categorical draw per row, returned as 1-based classes."""
    u = rng.random(len(rows))
    cumulative = np.cumsum(rows, axis=1)
    drawn = (u[:, None] >= cumulative).sum(axis=1) + 1
    return np.minimum(drawn, rows.shape[1])


def simulate_step(
    classes: np.ndarray,
    sectors: np.ndarray,
    P: TransitionMatrix,
    params: ModelParams,
    rng: np.random.Generator,
    table: np.ndarray = None,
) -> np.ndarray:
    classes = np.asarray(classes)
    sectors = np.asarray(sectors)
    M = P.n_classes
    if table is None:
        table = _eta_table(P, nondeterioration_probs(P))

    chi = sample_chi_vector(params.chi, rng)
    following = classes.copy()
    alive = np.flatnonzero(classes <= M)
    if len(alive) == 0:
        return following

    source = classes[alive]
    q = params.q.entries[source - 1, sectors[alive] - 1]
    idiosyncratic = rng.random(len(alive)) < q
    coupled_rows = table[source - 1, chi[source - 1]]
    rows = np.where(idiosyncratic[:, None], P.entries[source - 1], coupled_rows)
    if np.isnan(rows).any():
        raise ModelInconsistencyError("drawn tendency vector selects an undefined coupled row")
    following[alive] = _draw_rows(rows, rng)
    return following


def simulate_batch(
    initial: np.ndarray,
    sectors: np.ndarray,
    P: TransitionMatrix,
    params: ModelParams,
    T: int,
    R: int,
    rng_seed: int,
) -> ScenarioBatch:
    """R independent replications of T periods; each replication draws its own chi per period."""
    initial = np.asarray(initial, dtype=np.int64)
    sectors = np.asarray(sectors, dtype=np.int64)
    M = P.n_classes
    if params.n_classes != M:
        raise InputError(f"parameters have {params.n_classes} classes, matrix has {M}")
    if R < 1 or T < 0:
        raise InputError(f"need R >= 1 replications and T >= 0 periods, got R={R}, T={T}")
    if initial.shape != sectors.shape:
        raise InputError("initial classes and sectors differ in length")
    if len(initial) and ((initial < 1).any() or (initial > M + 1).any()):
        raise InputError(f"initial classes must lie in 1..{M + 1}")
    if len(sectors) and ((sectors < 1).any() or (sectors > params.n_sectors).any()):
        raise InputError(f"sectors must lie in 1..{params.n_sectors}")

    table = _eta_table(P, nondeterioration_probs(P))
    paths = np.empty((R, len(initial), T + 1), dtype=np.int64)
    streams = np.random.SeedSequence(rng_seed).spawn(R)
    for r, stream in enumerate(streams):
        rng = np.random.default_rng(stream)
        state = initial.copy()
        paths[r, :, 0] = state
        for t in range(1, T + 1):
            state = simulate_step(state, sectors, P, params, rng, table)
            paths[r, :, t] = state
    log.info("simulated %d replications of %d companies over %d periods", R, len(initial), T)
    return ScenarioBatch(paths, rng_seed, parameter_digest(P, params))


def synth_panel(
    P: TransitionMatrix,
    params: ModelParams,
    N: int,
    T: int,
    S: int,
    rng_seed: int,
    first_period: int = 1,
) -> RatingPanel:
    """Synthetic panel of N companies over T periods; a company stops being rated after default.

    Sectors are assigned round-robin, initial classes uniformly over the non-default classes.
    """
    if N < 1 or T < 1:
        raise InputError("synthetic panel needs N >= 1 and T >= 1")
    if S != params.n_sectors:
        raise InputError(f"parameters have {params.n_sectors} sectors, not {S}")
    M = P.n_classes
    start_stream, path_stream = np.random.SeedSequence(rng_seed).spawn(2)
    initial = np.random.default_rng(start_stream).integers(1, M + 1, size=N)
    sectors = np.arange(N) % S + 1
    path_seed = int(path_stream.generate_state(1)[0])
    paths = simulate_batch(initial, sectors, P, params, T - 1, 1, path_seed).paths[0]

    records = []
    for n in range(N):
        for t in range(T):
            records.append((f"C{n:06d}", sectors[n], first_period + t, paths[n, t]))
            if paths[n, t] == M + 1:
                break
    return RatingPanel(new_observations(records), default_class=M + 1)


def default_correlation(batch: ScenarioBatch, default_class: int) -> Dict[int, float]:
    """Pairwise default correlation at the horizon among companies sharing an initial class."""
    if batch.n_replications == 0:
        return {}
    initial = batch.paths[0, :, 0]
    defaulted = batch.paths[:, :, -1] == default_class
    result: Dict[int, float] = {}
    for m in np.unique(initial):
        if m >= default_class:
            continue
        group = np.flatnonzero(initial == m)
        g = len(group)
        if g < 2:
            continue
        k = defaulted[:, group].sum(axis=1).astype(float)
        p = k.mean() / g
        joint = (k * (k - 1)).mean() / (g * (g - 1))
        if p <= 0 or p >= 1:
            result[int(m)] = float("nan")
        else:
            result[int(m)] = float((joint - p * p) / (p * (1 - p)))
    return result


def exact_pair_default_probability(P: TransitionMatrix, params: ModelParams, m: int, s: int) -> float:
    """Probability that two class-m, sector-s companies both default in the next period."""
    p_plus = nondeterioration_probs(P)
    q = params.q.entries[m - 1, s - 1]
    marginal_one = params.chi.marginals()[m - 1]
    d = P.entries[m - 1, -1]
    joint = 0.0
    for bit, weight in ((1, marginal_one), (0, 1.0 - marginal_one)):
        if weight <= 0:
            continue
        coupled = eta_row(P, p_plus, m, bit)[-1]
        joint += weight * (q * d + (1.0 - q) * coupled) ** 2
    return joint
