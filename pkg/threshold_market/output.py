"""Persistence of run artifacts.

CSV files are written through pandas with 17 significant digits so that every
stored real reads back bit-for-bit. ``manifest.json`` is written atomically.
"""

from __future__ import annotations

from json import dump
from math import isfinite
from os import makedirs, replace
from os.path import dirname, exists, join
from tempfile import NamedTemporaryFile
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence

import numpy as np
import pandas as pd

from .analysis.qexp import normalization, q_exponential, q_of_RQ
from .const import (
    ACTIVITY_CSV,
    CSV_HEADERS,
    DAILY_CSV,
    FIGURE_CSV,
    FITS_CSV,
    FLOAT_FORMAT,
    INTEROCCURRENCE_CSV,
    R_MAX_FACTOR,
    RESETS_CSV,
    ROUNDS_CSV,
)
from .dataclass import ExperimentBundle, MarketSeries, ReplicaRun, RqResult
from .errors import DomainError, MarketError
from .log import log_warning


def rq_label(value: float) -> str:
    """Return the compact text form of an R_Q value used in file names."""
    return f"{value:g}"


def interoccurrence_name(target_rq: float) -> str:
    """Return the interoccurrence file name for *target_rq*."""
    return INTEROCCURRENCE_CSV.format(value=rq_label(target_rq))


def write_table(path: str, header: Sequence[str], columns: Mapping[str, Any]) -> str:
    """Write equally long *columns* as a CSV with the fixed *header* order."""
    frame = pd.DataFrame({name: columns[name] for name in header}, columns=list(header))
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def write_rounds(directory: str, series: MarketSeries) -> str:
    """Write ``rounds.csv``: the magnetization at round 0 and after every round."""
    mags = series.magnetization_per_round
    return write_table(
        join(directory, ROUNDS_CSV),
        CSV_HEADERS[ROUNDS_CSV],
        {"round": np.arange(mags.size, dtype=np.int64), "M": mags},
    )


def write_daily(directory: str, series: MarketSeries) -> str:
    """Write ``daily.csv``; day 0 carries the initial price and no return."""
    returns = np.concatenate(([np.nan], series.returns))
    return write_table(
        join(directory, DAILY_CSV),
        CSV_HEADERS[DAILY_CSV],
        {
            "day": np.arange(series.log_price.size, dtype=np.int64),
            "ln_price": series.log_price,
            "return": returns,
        },
    )


def write_resets(directory: str, series: MarketSeries) -> str:
    """Write ``resets.csv`` with one row per market-maker reset."""
    return write_table(
        join(directory, RESETS_CSV),
        CSV_HEADERS[RESETS_CSV],
        {
            "round": np.array([r.round_index for r in series.resets], dtype=np.int64),
            "pre_reset_M": np.array(
                [r.pre_reset_m for r in series.resets], dtype=np.float64
            ),
        },
    )


def write_activity(directory: str, run: ReplicaRun) -> Optional[str]:
    """Write ``activity.csv`` (drawings that changed an opinion), if recorded."""
    if run.activity is None or run.activity_sites is None:
        return None
    changed = np.flatnonzero(run.activity)
    return write_table(
        join(directory, ACTIVITY_CSV),
        CSV_HEADERS[ACTIVITY_CSV],
        {
            "drawing": changed.astype(np.int64),
            "site": run.activity_sites[changed],
            "d": run.activity[changed].astype(np.int64),
        },
    )


def write_replica(directory: str, run: ReplicaRun, write_rounds_file: bool = True) -> List[str]:
    """Write the per-replica series files and return their paths."""
    paths = []
    if write_rounds_file:
        paths.append(write_rounds(directory, run.series))
    paths.append(write_daily(directory, run.series))
    paths.append(write_resets(directory, run.series))
    activity = write_activity(directory, run)
    if activity:
        paths.append(activity)
    return paths


def _fitted_mass(result: RqResult, r: np.ndarray) -> np.ndarray:
    if result.fit is None:
        return np.full(r.size, np.nan)
    fit = result.fit
    return q_exponential(r, fit.q, fit.beta_scale) / normalization(
        fit.r_max, fit.q, fit.beta_scale
    )


def write_interoccurrence(directory: str, result: RqResult) -> str:
    """Write ``interoccurrence_RQ<value>.csv`` for one target R_Q.

    A target without loss events gets a file holding only the header.
    """
    path = join(directory, interoccurrence_name(result.target_rq))
    header = CSV_HEADERS["interoccurrence"]
    if result.analysis is None:
        return write_table(path, header, {name: np.empty(0) for name in header})
    r = result.analysis.pq_r.astype(np.float64)
    return write_table(
        path,
        header,
        {
            "r": result.analysis.pq_r,
            "empirical_P": result.analysis.pq,
            "fitted_P": _fitted_mass(result, r),
        },
    )


def write_fits(directory: str, results: Iterable[RqResult]) -> str:
    """Write ``fits.csv`` with one row per target R_Q that produced events."""
    rows: Dict[str, List[Any]] = {name: [] for name in CSV_HEADERS[FITS_CSV]}
    for item in results:
        if item.analysis is None:
            continue
        rows["R_Q"].append(item.analysis.R_Q)
        rows["Q"].append(item.Q)
        rows["q_fit"].append(item.fit.q if item.fit else np.nan)
        rows["beta_fit"].append(item.fit.beta_scale if item.fit else np.nan)
        rows["rms_log_residual"].append(item.fit.rms_log_residual if item.fit else np.nan)
        rows["n_events"].append(item.analysis.n_events)
    rows["n_events"] = np.array(rows["n_events"], dtype=np.int64)
    return write_table(join(directory, FITS_CSV), CSV_HEADERS[FITS_CSV], rows)


def _law_mass(target_rq: float, q0: float, plateau: float, r: np.ndarray, r_max: int):
    try:
        q = q_of_RQ(target_rq, q0)
    except DomainError:
        return np.full(r.size, np.nan)
    return q_exponential(r, q, plateau) / normalization(r_max, q, plateau)


def emit_plot_data(bundle: ExperimentBundle) -> str:
    """Merge every R_Q into ``figure_data.csv``.

    ``paper_law_P`` evaluates the logarithmic ``q(R_Q)`` law at the target
    R_Q with the plateau rate, normalized on the same support as the fit.
    Targets without a fit keep their empirical rows with ``fitted_P`` empty
    and are reported as warnings.
    """
    params = bundle.config.analysis
    frames = []
    for item in sorted(bundle.results, key=lambda res: res.target_rq):
        if item.analysis is None:
            log_warning(f"No loss events for R_Q={rq_label(item.target_rq)}; omitted from plot data")
            continue
        if item.fit is None:
            log_warning(f"No fit for R_Q={rq_label(item.target_rq)}; plot data is partial")
        r = item.analysis.pq_r.astype(np.float64)
        r_max = R_MAX_FACTOR * int(item.analysis.inter_times.max())
        frames.append(
            pd.DataFrame(
                {
                    "R_Q": np.full(r.size, float(item.target_rq)),
                    "r": item.analysis.pq_r,
                    "empirical_P": item.analysis.pq,
                    "fitted_P": _fitted_mass(item, r),
                    "paper_law_P": _law_mass(
                        item.target_rq, params.q0, params.beta_plateau, r, r_max
                    ),
                }
            )
        )
    header = list(CSV_HEADERS[FIGURE_CSV])
    frame = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=header)
    path = join(bundle.output_dir, FIGURE_CSV)
    frame[header].to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


def finite_or_none(value: Optional[float]) -> Optional[float]:
    """Return *value* as a float, or ``None`` when missing or not finite."""
    if value is None or not isfinite(value):
        return None
    return float(value)


def write_manifest(path: str, payload: Dict[str, Any]) -> str:
    """Write *payload* as JSON through a temporary file and an atomic replace."""
    directory = dirname(path)
    if directory and not exists(directory):
        makedirs(directory, exist_ok=True)

    with NamedTemporaryFile("w", delete=False, dir=directory, encoding="utf-8") as f:
        dump(payload, f, indent=2, sort_keys=True)
        tmp_path = f.name

    replace(tmp_path, path)
    return path


def _read_column(path: str, column: str) -> pd.Series:
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except (OSError, ValueError) as err:
        raise MarketError(f"cannot read {path}: {err}") from err
    if column not in frame.columns:
        raise MarketError(f"{path} has no '{column}' column")
    return frame[column].dropna()


def read_daily_returns(path: str) -> np.ndarray:
    """Read the daily returns stored in a ``daily.csv``."""
    return _read_column(path, "return").to_numpy(dtype=np.float64)


def read_inter_times(path: str) -> np.ndarray:
    """Read raw interoccurrence times from the ``r`` column of a CSV.

    Raises:
        MarketError: If the column is missing or holds non-positive or
            non-integer values.
    """
    values = _read_column(path, "r").to_numpy(dtype=np.float64)
    if values.size and (values.min() < 1 or not np.all(values == np.floor(values))):
        raise MarketError(f"{path}: interoccurrence times must be positive integers")
    return values.astype(np.int64)
