"""Handle the configuration of runs and the files they read and write."""
from __future__ import annotations

import dataclasses
import json
import lzma
import pickle
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np  # type: ignore
import pandas as pd  # type: ignore

from cmc.evolution import EaConfig, Generation
from cmc.exceptions import InputError
from cmc.method import Method
from cmc.model import (
    ChiDistribution,
    ModelParams,
    QMatrix,
    TransitionMatrix,
    validate_transition_matrix,
)
from cmc.panel import RatingPanel, new_observations
from cmc.swarm import Swarm, SwarmConfig

PANEL_COLUMNS = ["company_id", "sector", "year", "rating"]
FLOAT_FORMAT = "%.17g"
# Settings that count things and must be positive when given.
COUNT_FIELDS = (
    "classes", "sectors", "functionals", "k_directions", "l_samples",
    "runs", "companies", "periods", "replications",
)


@dataclass
class RunConfig:
    """Every setting of a run; mirrors the command-line flags one to one."""

    method: Method = Method.PSO
    seed: int = 0
    out_dir: str = "out"
    panel: Optional[str] = None
    matrix: Optional[str] = None
    params: Optional[str] = None
    checkpoint: Optional[str] = None
    classes: Optional[int] = None
    sectors: Optional[int] = None
    iters: int = 150
    swarm_size: int = 200
    c0: float = 0.5
    c1: float = 1.5
    c2: float = 1.5
    var_threshold: float = 1e-6
    max_bounces: int = 100
    elite: int = 30
    crossover: int = 50
    mutants: int = 100
    random: int = 50
    init_population: int = 750
    functionals: int = 20
    k_directions: int = 40
    l_samples: int = 200
    runs: int = 1
    companies: int = 100
    periods: int = 10
    horizon: int = 5
    replications: int = 1000

    def __post_init__(self):
        for name in COUNT_FIELDS:
            value = getattr(self, name)
            if value is not None and value < 1:
                raise InputError(f"{name.replace('_', '-')} must be at least 1, got {value}")
        if self.iters < 0 or self.horizon < 0:
            raise InputError("iters and horizon must be nonnegative")

    def swarm_config(self, seed: Optional[int] = None) -> SwarmConfig:
        return SwarmConfig(
            c0=self.c0,
            c1=self.c1,
            c2=self.c2,
            swarm_size=self.swarm_size,
            max_iterations=self.iters,
            var_threshold=self.var_threshold,
            rng_seed=self.seed if seed is None else seed,
            max_bounces=self.max_bounces,
            n_functionals=self.functionals,
            k_directions=self.k_directions,
        )

    def ea_config(self, seed: Optional[int] = None) -> EaConfig:
        return EaConfig(
            e=self.elite,
            c=self.crossover,
            m=self.mutants,
            r=self.random,
            initial_population=self.init_population,
            max_iterations=self.iters,
            rng_seed=self.seed if seed is None else seed,
            n_functionals=self.functionals,
            k_directions=self.k_directions,
        )


def _cast(name: str, raw: str) -> Any:
    default = {f.name: f.default for f in dataclasses.fields(RunConfig)}[name]
    try:
        if name == "method":
            return Method(raw.strip().lower())
        if default is None:
            return int(raw) if name in ("classes", "sectors") else raw
        if isinstance(default, bool):
            return raw.strip().lower() in ("1", "true", "yes", "on")
        return type(default)(raw)
    except ValueError as e:
        raise InputError(f"bad value {raw!r} for {name}") from e


def parse_config_text(text: str) -> Dict[str, Any]:
    """Parse flat ``key = value`` lines; ``#`` starts a comment, dashes equal underscores."""
    known = {f.name for f in dataclasses.fields(RunConfig)}
    values: Dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"config line {lineno}: expected key = value")
        key, raw = (part.strip() for part in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        if key not in known:
            raise InputError(f"config line {lineno}: unknown key {key!r}")
        values[key] = _cast(key, raw)
    return values


def load_config(filename: Optional[str], overrides: Dict[str, Any]) -> RunConfig:
    """Defaults, then the config file, then explicit overrides."""
    values: Dict[str, Any] = {}
    if filename:
        try:
            with open(filename) as f:
                values.update(parse_config_text(f.read()))
        except OSError as e:
            raise InputError(f"cannot read config file {filename}: {e}") from e
    values.update(overrides)
    return RunConfig(**values)


def read_matrix(filename: str) -> TransitionMatrix:
    try:
        raw = np.loadtxt(filename, delimiter=",", ndmin=2)
    except (OSError, ValueError) as e:
        raise InputError(f"cannot read transition matrix {filename}: {e}") from e
    return validate_transition_matrix(raw)


def write_matrix(P: TransitionMatrix, filename: str) -> None:
    np.savetxt(filename, P.entries, delimiter=",", fmt=FLOAT_FORMAT)


def read_panel(filename: str, default_class: Optional[int] = None) -> RatingPanel:
    try:
        frame = pd.read_csv(filename, dtype={"company_id": str})
    except (OSError, pd.errors.EmptyDataError, pd.errors.ParserError) as e:
        raise InputError(f"cannot read panel {filename}: {e}") from e
    missing = [c for c in PANEL_COLUMNS if c not in frame.columns]
    if missing:
        raise InputError(f"panel {filename} lacks columns {missing}")
    if frame.empty:
        raise InputError(f"panel {filename} has no observations")
    if frame[PANEL_COLUMNS].isna().any().any():
        raise InputError(f"panel {filename} has missing values")
    try:
        records = frame[PANEL_COLUMNS].itertuples(index=False, name=None)
        observations = new_observations(records)
    except ValueError as e:
        raise InputError(f"panel {filename} has non-integer entries: {e}") from e
    return RatingPanel(observations, default_class)


def panel_frame(panel: RatingPanel) -> pd.DataFrame:
    obs = panel.observations
    return pd.DataFrame(
        {
            "company_id": obs["company"],
            "sector": obs["sector"],
            "year": obs["period"],
            "rating": obs["rating"],
        }
    )


def write_panel(panel: RatingPanel, filename: str) -> None:
    panel_frame(panel).to_csv(filename, index=False)


def write_chi(chi: ChiDistribution, filename: str) -> None:
    frame = pd.DataFrame({"bitmask_index": np.arange(len(chi.probs)), "probability": chi.probs})
    frame.to_csv(filename, index=False, header=False, float_format=FLOAT_FORMAT)


def read_chi(filename: str) -> ChiDistribution:
    try:
        frame = pd.read_csv(filename, header=None, names=["bitmask_index", "probability"], float_precision="round_trip")
    except (OSError, pd.errors.EmptyDataError) as e:
        raise InputError(f"cannot read chi vector {filename}: {e}") from e
    if list(frame["bitmask_index"]) != list(range(len(frame))):
        raise InputError(f"chi vector {filename} must list indices 0..2^M-1 in order")
    return ChiDistribution(frame["probability"].to_numpy(dtype=float))


def result_document(
    params: ModelParams,
    loglik: float,
    method: str,
    seed: int,
    iterations: int,
) -> Dict[str, Any]:
    return {
        "method": method,
        "seed": seed,
        "iterations": iterations,
        "loglik": loglik,
        "classes": params.n_classes,
        "sectors": params.n_sectors,
        "q": [float(x) for x in params.q.entries.ravel()],
        "chi": [float(x) for x in params.chi.probs],
    }


def write_result(document: Dict[str, Any], filename: str) -> None:
    with open(filename, "w") as f:
        json.dump(document, f, indent=2, sort_keys=True)
        f.write("\n")


def read_result(filename: str) -> Tuple[ModelParams, Dict[str, Any]]:
    try:
        with open(filename) as f:
            document = json.load(f)
        M, S = int(document["classes"]), int(document["sectors"])
        q = QMatrix(np.array(document["q"], dtype=float).reshape(M, S))
        chi = ChiDistribution(document["chi"])
    except (OSError, KeyError, ValueError, TypeError) as e:
        raise InputError(f"cannot read parameter file {filename}: {e}") from e
    return ModelParams(q, chi), document


def initial_state(panel: RatingPanel, default_class: int) -> Tuple[List[str], np.ndarray, np.ndarray]:
    """Last observed rating and sector of every company that has not defaulted."""
    obs = panel.observations
    last = np.ones(len(obs), dtype=bool)
    if len(obs) > 1:
        last[:-1] = obs["company"][1:] != obs["company"][:-1]
    latest = obs[last]
    latest = latest[latest["rating"] < default_class]
    return list(latest["company"]), latest["rating"].astype(np.int64), latest["sector"].astype(np.int64)


def load_engine(filename: str) -> Union[Swarm, Generation]:
    """Load a checkpointed optimizer from a compressed file."""
    try:
        with open(filename, "rb") as f:
            engine = pickle.loads(lzma.decompress(f.read()))
    except (OSError, lzma.LZMAError, pickle.UnpicklingError) as e:
        raise InputError(f"cannot load checkpoint {filename}: {e}") from e
    if not isinstance(engine, (Swarm, Generation)):
        raise InputError(f"{filename} is not an optimizer checkpoint")
    return engine
