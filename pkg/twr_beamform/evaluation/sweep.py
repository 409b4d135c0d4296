"""
Monte Carlo sweep driver: flat key=value configuration, seeded trials on a
worker pool, mean/std reduction and CSV emission.
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import ValidationError

from twr_beamform.config import settings
from twr_beamform.models.experiment import ExperimentConfig
from twr_beamform.services.link_eval import run_trial
from twr_beamform.utils.errors import ConfigError, TwrBeamformError
from twr_beamform.utils.logging_config import get_logger

logger = get_logger(__name__)

CSV_COLUMNS = ["method", "snr_db", "ns", "nrs", "k", "r", "se_mean", "se_std", "trials", "seed"]

LIST_FIELDS = {
    "snr_db_grid", "methods", "r_values", "ns_values", "n_rs_values", "k_values", "had_target_values",
}


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

def _parse_value(key: str, raw: str) -> Any:
    raw = raw.strip()
    if raw.lower() in ("none", "null"):
        return None
    if key in LIST_FIELDS:
        return [item.strip() for item in raw.split(",") if item.strip()]
    return raw


def read_config_file(path: Path) -> Dict[str, Any]:
    """Flat key=value file; '#' starts a comment, keys are case-insensitive."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Config file not found: {path}", ["config"])
    values: Dict[str, Any] = {}
    with open(path, "r", encoding="utf-8") as f:
        for number, line in enumerate(f, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{number}: expected key=value, got '{line}'", ["config"])
            key, raw = line.split("=", 1)
            key = key.strip().lower()
            values[key] = _parse_value(key, raw)
    return values


def parse_overrides(items: Sequence[str]) -> Dict[str, Any]:
    """``key=value`` strings from the command line."""
    values: Dict[str, Any] = {}
    for item in items:
        if "=" not in item:
            raise ConfigError(f"Override '{item}' is not of the form key=value", ["set"])
        key, raw = item.split("=", 1)
        key = key.strip().lower()
        values[key] = _parse_value(key, raw)
    return values


def _validation_fields(e: ValidationError) -> List[str]:
    fields = []
    for err in e.errors():
        if err.get("loc"):
            fields.append(str(err["loc"][0]))
        cause = (err.get("ctx") or {}).get("error")
        if isinstance(cause, ConfigError):
            fields.extend(cause.fields)
    return sorted(set(fields))


def parse_config(
    path: Optional[Path] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    base: Optional[Mapping[str, Any]] = None,
) -> ExperimentConfig:
    """
    Build a validated ExperimentConfig.

    Args:
        path: Optional key=value config file
        overrides: Values taking precedence over the file
        base: Starting values (e.g. a preset) below the file

    Raises:
        ConfigError: Unknown key or violated invariant; ``fields`` names the culprits
    """
    values: Dict[str, Any] = dict(base or {})
    if path is not None:
        values.update(read_config_file(path))
    values.update(overrides or {})
    try:
        config = ExperimentConfig(**values)
    except ConfigError:
        raise
    except ValidationError as e:
        fields = _validation_fields(e)
        messages = "; ".join(f"{'.'.join(map(str, err['loc'])) or 'config'}: {err['msg']}" for err in e.errors())
        raise ConfigError(f"Invalid experiment configuration: {messages}", fields) from e
    logger.debug(f"Parsed experiment config: {config.model_dump(exclude_none=True)}")
    return config


# ---------------------------------------------------------------------------
# Sweep
# ---------------------------------------------------------------------------

@dataclass
class SweepResult:
    """Aggregated sweep rows, one per (method, parameter point, SNR)."""
    table: pd.DataFrame
    timestamp: str = field(default_factory=lambda: datetime.now().isoformat())
    failed_trials: int = 0

    def __len__(self) -> int:
        return len(self.table)

    @property
    def empty(self) -> bool:
        return self.table.empty

    def to_dict(self) -> Dict:
        return {
            "timestamp": self.timestamp,
            "rows": len(self.table),
            "failed_trials": self.failed_trials,
            "methods": sorted(self.table["method"].unique().tolist()) if not self.table.empty else [],
        }


def _trial_task(task: Tuple[int, ExperimentConfig, int]) -> Tuple[int, Dict[str, List[float]]]:
    index, point, seed = task
    try:
        return index, run_trial(point, seed)
    except Exception as e:
        logger.error(f"Trial seed={seed} failed before any method ran: {type(e).__name__}: {e}")
        nan_row = [float("nan")] * len(point.snr_db_grid)
        return index, {point.method_label(m): list(nan_row) for m in point.methods}


def _aggregate(values: np.ndarray) -> Tuple[float, float, int]:
    finite = values[np.isfinite(values)]
    if finite.size == 0:
        return float("nan"), float("nan"), 0
    std = float(np.std(finite, ddof=1)) if finite.size > 1 else 0.0
    return float(np.mean(finite)), std, int(finite.size)


def run_sweep(config: ExperimentConfig, workers: Optional[int] = None) -> SweepResult:
    """
    Run ``config.trials`` seeded trials (seed = base_seed + trial index) at every
    sweep point and reduce them to mean/std per method and SNR.
    Rows follow the point, method and SNR order of the config regardless of
    how many workers ran the trials.
    """
    workers = workers or settings.runtime.workers
    points = list(config.points())
    tasks = [
        (index, point, config.base_seed + trial)
        for index, point in enumerate(points)
        for trial in range(config.trials)
    ]
    logger.info(f"Sweep: {len(points)} points x {config.trials} trials on {workers} worker(s)")

    outcomes: Dict[int, List[Dict[str, List[float]]]] = {i: [] for i in range(len(points))}
    if workers == 1 or len(tasks) == 1:
        for task in tasks:
            index, outcome = _trial_task(task)
            outcomes[index].append(outcome)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for index, outcome in pool.map(_trial_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))):
                outcomes[index].append(outcome)

    rows = []
    failed = 0
    for index, point in enumerate(points):
        for method in point.methods:
            label = point.method_label(method)
            samples = np.array([outcome[label] for outcome in outcomes[index]], dtype=np.float64)
            failed += int(np.sum(~np.all(np.isfinite(samples), axis=1)))
            for j, snr_db in enumerate(point.snr_db_grid):
                se_mean, se_std, count = _aggregate(samples[:, j])
                rows.append({
                    "method": label, "snr_db": float(snr_db), "ns": point.ns, "nrs": point.n_rs,
                    "k": point.k, "r": point.r, "se_mean": se_mean, "se_std": se_std,
                    "trials": count, "seed": config.base_seed,
                })
        logger.info(f"Point {index + 1}/{len(points)} done (K={point.k}, Ns={point.ns}, N_rs={point.n_rs}, R={point.r})")

    if failed:
        logger.warning(f"{failed} method-trial evaluation(s) produced NaN; see the log for causes")
    table = pd.DataFrame(rows, columns=CSV_COLUMNS)
    return SweepResult(table=table, failed_trials=failed)


def emit_csv(results: SweepResult, path: Path) -> Path:
    """Write the sweep table as UTF-8 CSV with 9 significant digits and LF endings."""
    if results.empty:
        raise TwrBeamformError("No sweep results to write")
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        results.table.to_csv(
            path,
            index=False,
            columns=CSV_COLUMNS,
            float_format="%.9g",
            na_rep="nan",
            encoding="utf-8",
            lineterminator="\n",
        )
    except OSError as e:
        raise TwrBeamformError(f"Cannot write results to {path}: {e}") from e
    logger.info(f"Saved {len(results)} rows to {path}")
    return path
