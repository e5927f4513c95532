"""Experiment orchestration.

``run_experiment`` drives every replica through these steps:

- Seeds an independent random stream from the root seed and replica index.
- Draws a random initial lattice and discards the warmup rounds.
- Simulates ``total_days * tau`` rounds with a trap check after every round.
- Builds the daily price and return series.

The returns are then analyzed for every target R_Q and all artifacts plus
``manifest.json`` are written. When the largest target yields fewer loss
events than ``run.min_events`` the whole run is repeated once at double
length.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace as dc_replace
from os.path import join, relpath
from time import perf_counter
from typing import Any, Dict, List, Sequence

import numpy as np

from . import __version__
from .config import config_to_sections
from .const import MANIFEST_JSON
from .dataclass import ExperimentBundle, ExperimentConfig, ReplicaRun, RqResult
from .dynamics.lattice import init_lattice
from .errors import MarketError
from .log import check_clear_log, log_error, log_info, log_warning, setup_logging
from .market import run_market, series_from_record, summarize_activity
from .noise import WeierstrassNoise
from .output import (
    emit_plot_data,
    finite_or_none,
    write_fits,
    write_interoccurrence,
    write_manifest,
    write_replica,
)
from .paths import replica_dir, resolve_output_dir
from .pipeline import (
    analyze_returns,
    events_at_largest_target,
    first_failure,
    summarize_laws,
)


def replica_rng(seed: int, replica: int) -> np.random.Generator:
    """Return the random stream of *replica*, independent of every other replica."""
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(replica,)))
    )


def simulate_replica(config: ExperimentConfig, replica: int, total_days: int) -> ReplicaRun:
    """Simulate one replica and build its market series.

    Runs in worker processes, so it only takes picklable arguments and
    returns a picklable result.
    """
    rng = replica_rng(config.run.seed, replica)
    lattice = init_lattice(config.model.n, rng)
    record = run_market(
        lattice,
        config.dynamics,
        config.coupling,
        config.market,
        WeierstrassNoise(config.noise),
        rng,
        total_days * config.market.tau,
        warmup_rounds=config.run.warmup_rounds,
    )
    series = series_from_record(record, config.market, lattice.n_agents)
    demand, supply = summarize_activity(record)
    return ReplicaRun(
        index=replica,
        series=series,
        warmup_resets=record.warmup_resets,
        activity=record.activity,
        activity_sites=record.activity_sites,
        demand=demand,
        supply=supply,
    )


def _collect(replica: int, future_or_call) -> ReplicaRun:
    try:
        return future_or_call()
    except MarketError as err:
        raise err.annotate("simulation", replica)
    except (ValueError, IndexError) as err:
        raise MarketError(str(err)).annotate("simulation", replica) from err


def run_replicas(config: ExperimentConfig, total_days: int) -> List[ReplicaRun]:
    """Simulate all replicas, in a process pool when ``run.workers > 1``.

    Results come back in replica order whatever the pool schedule was.
    """
    count = config.run.replicas
    workers = min(config.run.workers, count)
    if workers <= 1:
        return [
            _collect(k, lambda k=k: simulate_replica(config, k, total_days))
            for k in range(count)
        ]

    with ProcessPoolExecutor(max_workers=workers) as executor:
        futures = [
            executor.submit(simulate_replica, config, k, total_days) for k in range(count)
        ]
        return [_collect(k, future.result) for k, future in enumerate(futures)]


def _simulate_and_analyze(config: ExperimentConfig, total_days: int):
    log_info(
        f"Simulating {config.run.replicas} replica(s) of {total_days} days "
        f"on a {config.model.n}x{config.model.n} lattice"
    )
    runs = run_replicas(config, total_days)
    for run in runs:
        log_info(
            f"Replica {run.index}: {len(run.series.resets)} resets "
            f"({run.warmup_resets} during warmup)"
        )
    results = analyze_returns([run.series.returns for run in runs], config.analysis)
    return runs, results


def _result_summary(item: RqResult) -> Dict[str, Any]:
    summary: Dict[str, Any] = {
        "target_RQ": item.target_rq,
        "Q": finite_or_none(item.Q),
        "R_Q": item.analysis.R_Q if item.analysis else None,
        "n_events": item.analysis.n_events if item.analysis else 0,
        "q": item.fit.q if item.fit else None,
        "beta": item.fit.beta_scale if item.fit else None,
        "rms_log_residual": item.fit.rms_log_residual if item.fit else None,
        "error": str(item.error) if item.error else None,
    }
    return summary


def manifest_payload(bundle: ExperimentBundle) -> Dict[str, Any]:
    """Return the JSON document describing *bundle*."""
    q_law = None
    if bundle.q_law is not None:
        q_law = {
            "slope": bundle.q_law.slope,
            "intercept": bundle.q_law.intercept,
            "r_value": bundle.q_law.r_value,
            "n_points": bundle.q_law.n_points,
        }
    return {
        "version": __version__,
        "seed": bundle.config.run.seed,
        "config": config_to_sections(bundle.config),
        "wall_time_seconds": bundle.wall_time,
        "total_days": bundle.total_days,
        "extended": bundle.extended,
        "replicas": [
            {
                "index": run.index,
                "days": run.days,
                "resets": len(run.series.resets),
                "warmup_resets": run.warmup_resets,
                "demand": run.demand,
                "supply": run.supply,
            }
            for run in bundle.replicas
        ],
        "fits": [_result_summary(item) for item in bundle.results],
        "q_law": q_law,
        "beta_plateau": bundle.beta_plateau,
        "files": list(bundle.files),
    }


def write_bundle(bundle: ExperimentBundle) -> ExperimentBundle:
    """Write every artifact of *bundle* and return it with the file list filled in."""
    root = bundle.output_dir
    paths: List[str] = []
    for run in bundle.replicas:
        directory = root if len(bundle.replicas) == 1 else replica_dir(root, run.index)
        paths.extend(write_replica(directory, run, bundle.config.write_rounds))
    for item in bundle.results:
        paths.append(write_interoccurrence(root, item))
    paths.append(write_fits(root, bundle.results))
    paths.append(emit_plot_data(bundle))

    files = tuple(relpath(p, root) for p in paths) + (MANIFEST_JSON,)
    bundle = dc_replace(bundle, files=files)
    write_manifest(join(root, MANIFEST_JSON), manifest_payload(bundle))
    return bundle


def _finish(
    config: ExperimentConfig,
    output_dir: str,
    runs: Sequence[ReplicaRun],
    results: Sequence[RqResult],
    started: float,
    total_days: int = 0,
    extended: bool = False,
    strict: bool = False,
) -> ExperimentBundle:
    failure = first_failure(results)
    if failure is not None:
        if strict:
            log_error(f"No target R_Q produced a fit: {failure}")
            raise failure.annotate("analysis")
        log_warning(f"No target R_Q produced a fit; writing partial results ({failure})")

    q_law, plateau = summarize_laws(results, config.analysis)
    bundle = ExperimentBundle(
        config=config,
        output_dir=output_dir,
        replicas=tuple(runs),
        results=tuple(results),
        q_law=q_law,
        beta_plateau=plateau,
        total_days=total_days,
        extended=extended,
        wall_time=perf_counter() - started,
    )
    try:
        bundle = write_bundle(bundle)
    except OSError as err:
        raise MarketError(f"cannot write results: {err}").annotate("output") from err
    log_info(f"Wrote {len(bundle.files)} files to {output_dir}")
    return bundle


def start_run(config: ExperimentConfig) -> str:
    """Resolve the output directory and point the log facade at it."""
    output_dir = resolve_output_dir(config.output_dir)
    setup_logging(config.logging, output_dir)
    check_clear_log()
    return output_dir


def run_experiment(config: ExperimentConfig) -> ExperimentBundle:
    """Simulate, analyze and persist a full experiment.

    Args:
        config: Validated configuration.

    Returns:
        The written bundle.

    Raises:
        MarketError: Annotated with the stage (and replica) that failed.
    """
    started = perf_counter()
    output_dir = start_run(config)
    log_info(f"Threshold Market {__version__}, seed {config.run.seed}")

    total_days = config.run.total_days
    runs, results = _simulate_and_analyze(config, total_days)

    extended = False
    events = events_at_largest_target(results)
    if events < config.run.min_events:
        log_warning(
            f"Only {events} loss events at the largest target R_Q "
            f"(need {config.run.min_events}); doubling the run to {2 * total_days} days"
        )
        total_days *= 2
        extended = True
        runs, results = _simulate_and_analyze(config, total_days)
        events = events_at_largest_target(results)
        if events < config.run.min_events:
            log_warning(f"Still only {events} loss events after extending the run")

    return _finish(config, output_dir, runs, results, started, total_days, extended)


def analyze_stored(
    config: ExperimentConfig, returns_by_replica: Sequence[np.ndarray]
) -> ExperimentBundle:
    """Re-run the analysis stage on stored daily returns and persist the results.

    Unlike a simulation, which always writes its (possibly partial) bundle,
    a re-analysis in which no target produced a fit raises the first error.
    """
    started = perf_counter()
    output_dir = start_run(config)
    log_info(f"Analyzing {len(returns_by_replica)} stored return series")
    results = analyze_returns(returns_by_replica, config.analysis)
    return _finish(config, output_dir, (), results, started, strict=True)
