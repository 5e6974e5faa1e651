"""Command implementations behind ``main.py``.

Each ``cmd_*`` function takes a resolved RunConfig and a console for
human-facing reports, writes its files under ``config.out_dir`` and
returns the path of its main output.
"""
from __future__ import annotations

import dataclasses
import logging
import os
from typing import Tuple, Union

import numpy as np  # type: ignore
import pandas as pd  # type: ignore
from rich.console import Console  # type: ignore
from rich.table import Table  # type: ignore

from cmc import reference, setup_run
from cmc.evolution import Generation, init_population, run_generations
from cmc.exceptions import InfeasibleError, InputError
from cmc.likelihood import log_likelihood
from cmc.method import Method
from cmc.model import (
    ModelParams,
    TransitionMatrix,
    nondeterioration_probs,
    validate_chi,
    validate_transition_matrix,
)
from cmc.panel import CountTensor, RatingPanel, count_tensor, estimate_transition_matrix, transition_counts
from cmc.sampler import affine_basis, feasible_start
from cmc.setup_run import RunConfig
from cmc.simulator import default_correlation, simulate_batch, synth_panel
from cmc.stability import run_stability
from cmc.swarm import Swarm, init_swarm, run_swarm
from cmc.trace import Trace

import utils

log = logging.getLogger(__name__)

# Parameter files may come from elsewhere and carry rounding.
PARAMS_TOL = 1e-6

Engine = Union[Swarm, Generation]


def transition_matrix(config: RunConfig) -> TransitionMatrix:
    if config.matrix:
        return setup_run.read_matrix(config.matrix)
    log.info("no matrix file given, using the 6-class example matrix")
    return validate_transition_matrix(reference.EXAMPLE_MATRIX)


def load_data(config: RunConfig) -> Tuple[TransitionMatrix, RatingPanel, CountTensor]:
    """Panel, transition matrix (read or estimated from the panel) and count tensor."""
    if not config.panel:
        raise InputError("a panel file is required")
    if config.matrix:
        P = setup_run.read_matrix(config.matrix)
        panel = setup_run.read_panel(config.panel, P.default_class)
    else:
        panel = setup_run.read_panel(config.panel)
        P = estimate_transition_matrix(panel, config.classes)
    if config.classes is not None and config.classes != P.n_classes:
        raise InputError(f"declared {config.classes} classes, matrix has {P.n_classes}")
    n_sectors = config.sectors or int(panel.observations["sector"].max())
    counts = count_tensor(panel, P.n_classes, n_sectors)
    if panel.gap_count:
        log.info("skipped %d gaps in the panel", panel.gap_count)
    return P, panel, counts


def _resume(config: RunConfig, P: TransitionMatrix, counts: CountTensor) -> Engine:
    engine = setup_run.load_engine(config.checkpoint)
    wanted = Swarm if config.method is Method.PSO else Generation
    if not isinstance(engine, wanted):
        raise InputError(f"checkpoint {config.checkpoint} is not a {config.method.value} run")
    same_data = (
        engine.objective.counts.counts.shape == counts.counts.shape
        and np.array_equal(engine.objective.counts.counts, counts.counts)
        and np.array_equal(engine.objective.P.entries, P.entries)
    )
    if not same_data:
        raise InputError(f"checkpoint {config.checkpoint} was made on other data")
    engine.config = dataclasses.replace(engine.config, max_iterations=config.iters)
    log.info("resuming %s run at iteration %d", config.method.value, engine.iteration)
    return engine


def run_engine(config: RunConfig, P: TransitionMatrix, counts: CountTensor, seed: int) -> Engine:
    if config.method is Method.PSO:
        return run_swarm(init_swarm(config.swarm_config(seed), P, counts))
    return run_generations(init_population(config.ea_config(seed), P, counts))


def engine_result(engine: Engine) -> Tuple[ModelParams, Trace]:
    if isinstance(engine, Swarm):
        return engine.best_params, engine.trace
    return engine.best.params, engine.trace


def render_params(params: ModelParams, console: Console) -> None:
    table = Table(title="Idiosyncratic switching probabilities q[m, s]")
    table.add_column("class", justify="right")
    for s in range(1, params.n_sectors + 1):
        table.add_column(reference.sector_label(s), justify="right")
    for m, row in enumerate(params.q.entries, 1):
        table.add_row(str(m), *(f"{x:.4f}" for x in row))
    console.print(table)


def cmd_estimate_p(config: RunConfig, console: Console) -> str:
    if not config.panel:
        raise InputError("a panel file is required")
    panel = setup_run.read_panel(config.panel)
    P = estimate_transition_matrix(panel, config.classes)
    table = transition_counts(panel, P.n_classes)

    report = Table(title="Observed one-period transitions")
    report.add_column("class", justify="right")
    report.add_column("moves", justify="right")
    report.add_column("defaults", justify="right")
    for m, row in enumerate(table, 1):
        report.add_row(str(m), str(int(row.sum())), str(int(row[-1])))
    console.print(report)
    console.print(f"{panel.gap_count} gaps skipped")

    filename = utils.get_output(config.out_dir, "transition_matrix.csv")
    setup_run.write_matrix(P, filename)
    log.info("wrote %s", filename)
    return filename


def cmd_estimate(config: RunConfig, console: Console) -> str:
    P, _, counts = load_data(config)
    if config.checkpoint and os.path.exists(config.checkpoint):
        engine = _resume(config, P, counts)
        if isinstance(engine, Swarm):
            run_swarm(engine)
        else:
            run_generations(engine)
    else:
        engine = run_engine(config, P, counts, config.seed)
    if config.checkpoint:
        engine.save_as(config.checkpoint)

    params, trace = engine_result(engine)
    document = setup_run.result_document(params, trace.last.best, config.method.value, config.seed, trace.last.iteration)
    result_file = utils.get_output(config.out_dir, "result.json")
    setup_run.write_result(document, result_file)
    trace.write_csv(utils.get_output(config.out_dir, "trace.csv"))
    setup_run.write_chi(params.chi, utils.get_output(config.out_dir, "chi.csv"))
    render_params(params, console)
    console.print(f"{config.method.value}: best log-likelihood {trace.last.best:.6f} after {trace.last.iteration} iterations")

    if config.runs > 1:
        report = run_stability(
            lambda seed: engine_result(run_engine(config, P, counts, seed)),
            config.seed,
            config.runs,
        )
        report.write(
            utils.get_output(config.out_dir, "stability.csv"),
            utils.get_output(config.out_dir, "stability.json"),
        )
        report.render(console)
    return result_file


def initial_companies(config: RunConfig, P: TransitionMatrix, params: ModelParams):
    """Starting ids, classes and sectors: the panel's latest ratings, or an even spread."""
    if config.panel:
        panel = setup_run.read_panel(config.panel, P.default_class)
        return setup_run.initial_state(panel, P.default_class)
    n = np.arange(config.companies)
    ids = [f"C{k:06d}" for k in n]
    return ids, n % P.n_classes + 1, (n // P.n_classes) % params.n_sectors + 1


def cmd_simulate(config: RunConfig, console: Console) -> str:
    if not config.params:
        raise InputError("an estimated parameter file is required")
    P = transition_matrix(config)
    params, _ = setup_run.read_result(config.params)
    if params.n_classes != P.n_classes:
        raise InputError(f"parameters have {params.n_classes} classes, matrix has {P.n_classes}")
    validate_chi(params.chi.probs, nondeterioration_probs(P), tol=PARAMS_TOL)
    ids, initial, sectors = initial_companies(config, P, params)

    batch = simulate_batch(
        initial, sectors, P, params, config.horizon, config.replications, utils.seed_for(config.seed, "simulator")
    )
    R, N, width = batch.paths.shape
    replication, company, period = np.indices((R, N, width)).reshape(3, -1)
    frame = pd.DataFrame(
        {
            "replication": replication,
            "company": np.asarray(ids, dtype=object)[company],
            "period": period,
            "rating": batch.paths.ravel(),
        }
    )
    filename = utils.get_output(config.out_dir, "scenarios.csv")
    frame.to_csv(filename, index=False)
    log.info("wrote %d scenario rows to %s", len(frame), filename)

    if config.horizon > 0:
        report = Table(title=f"Default correlation at period {config.horizon}")
        report.add_column("initial class", justify="right")
        report.add_column("correlation", justify="right")
        for m, rho in default_correlation(batch, P.default_class).items():
            report.add_row(str(m), f"{rho:.4f}")
        console.print(report)
    return filename


def cmd_sample_feasible(config: RunConfig, console: Console) -> str:
    P = transition_matrix(config)
    p_plus = nondeterioration_probs(P)
    samples = feasible_start(
        p_plus,
        config.sectors or 1,
        0,
        config.seed,
        n_functionals=config.functionals,
        K=config.k_directions,
        L=config.l_samples,
    )
    dimension = affine_basis(p_plus).dimension
    chi_samples = samples.chi_samples if dimension else samples.chi_samples[:1]
    provenance = samples.provenance[: len(chi_samples)]
    for k, chi in enumerate(chi_samples):
        if not chi.is_feasible(p_plus):
            raise InfeasibleError(f"sample {k} violates its constraints by {chi.violation(p_plus):.3g}")

    frame = pd.DataFrame(np.array([chi.probs for chi in chi_samples]))
    frame.columns = [f"chi_{k}" for k in range(frame.shape[1])]
    frame.insert(0, "lambda", [lam for _, lam in provenance])
    frame.insert(0, "direction", [d for d, _ in provenance])
    filename = utils.get_output(config.out_dir, "samples.csv")
    frame.to_csv(filename, index_label="sample", float_format=setup_run.FLOAT_FORMAT)

    summary = {
        "K": samples.n_directions,
        "L": config.l_samples,
        "seed": config.seed,
        "dimension": dimension,
        "vertices": [[float(x) for x in v.probs] for v in samples.vertices],
        "samples": len(chi_samples),
    }
    setup_run.write_result(summary, utils.get_output(config.out_dir, "samples.json"))
    console.print(
        f"{len(samples.vertices)} vertices, {samples.n_directions} directions, {len(chi_samples)} samples"
    )
    return filename


def cmd_synth(config: RunConfig, console: Console) -> str:
    """Synthetic panel from known parameters, plus those parameters and the matrix used."""
    P = transition_matrix(config)
    if config.params:
        truth, _ = setup_run.read_result(config.params)
        validate_chi(truth.chi.probs, nondeterioration_probs(P), tol=PARAMS_TOL)
        n_sectors = config.sectors or truth.n_sectors
    else:
        n_sectors = config.sectors or 2
        samples = feasible_start(
            nondeterioration_probs(P),
            n_sectors,
            1,
            config.seed,
            n_functionals=config.functionals,
            K=config.k_directions,
            L=config.l_samples,
        )
        truth = ModelParams(*samples.pairs(1)[0])

    panel = synth_panel(
        P, truth, config.companies, config.periods, n_sectors, utils.seed_for(config.seed, "simulator")
    )
    counts = count_tensor(panel, P.n_classes, n_sectors)
    loglik = log_likelihood(counts, P, truth)

    filename = utils.get_output(config.out_dir, "panel.csv")
    setup_run.write_panel(panel, filename)
    setup_run.write_matrix(P, utils.get_output(config.out_dir, "matrix.csv"))
    setup_run.write_result(
        setup_run.result_document(truth, loglik, "truth", config.seed, 0),
        utils.get_output(config.out_dir, "truth.json"),
    )
    console.print(f"{panel.n_companies} companies, {len(panel)} observations, true log-likelihood {loglik:.6f}")
    return filename


def cmd_compare(config: RunConfig, console: Console) -> str:
    """Run both methods on the same data and seed."""
    P, _, counts = load_data(config)
    rows = []
    for method in Method:
        run = dataclasses.replace(config, method=method)
        _, trace = engine_result(run_engine(run, P, counts, config.seed))
        rows.append([method.value, trace.last.best, trace.last.mean, trace.last.iteration])
        trace.write_csv(utils.get_output(config.out_dir, f"trace_{method.value}.csv"))

    frame = pd.DataFrame(rows, columns=["method", "best", "final_mean", "iterations"])
    filename = utils.get_output(config.out_dir, "compare.csv")
    frame.to_csv(filename, index=False, float_format=setup_run.FLOAT_FORMAT)

    report = Table(title="Method comparison")
    for column in ("method", "best L", "final mean L", "iterations"):
        report.add_column(column, justify="right")
    for method, best, mean, iterations in rows:
        report.add_row(method, f"{best:.6f}", f"{mean:.6f}", str(iterations))
    console.print(report)
    return filename
