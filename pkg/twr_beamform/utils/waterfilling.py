"""
Bisection water-level solver shared by the relay and terminal power allocations.

Solves  sum_i max(1/mu - floor_i, 0) = budget  for the water level mu, where
floor_i = inf marks a channel that never receives power.
"""
from typing import Tuple

import numpy as np
import numpy.typing as npt

from twr_beamform.config import settings
from twr_beamform.utils.errors import DegenerateDesignError
from twr_beamform.utils.logging_config import get_logger

logger = get_logger(__name__)


def _allocation(mu: float, floors: npt.NDArray[np.float64]) -> npt.NDArray[np.float64]:
    return np.maximum(1.0 / mu - floors, 0.0)


def water_level(
    floors,
    budget: float,
    tol: float | None = None,
    max_iter: int | None = None,
) -> Tuple[npt.NDArray[np.float64], float]:
    """
    Find the water level mu by bisection and return (levels, mu).

    Args:
        floors: per-channel floors (1/gain); np.inf for unusable channels
        budget: total amount to distribute, > 0
        tol: relative tolerance on the distributed total
        max_iter: bisection iteration cap

    Returns:
        Tuple of (allocation summing to budget, water level mu)
    """
    tol = settings.numerics.waterfill_tol if tol is None else tol
    max_iter = settings.numerics.waterfill_max_iter if max_iter is None else max_iter
    floors = np.asarray(floors, dtype=np.float64)
    if budget <= 0:
        raise DegenerateDesignError(f"Water-filling budget must be positive, got {budget}")
    finite = np.isfinite(floors)
    if not np.any(finite):
        raise DegenerateDesignError("Water-filling needs at least one channel with positive gain")

    c_min = float(np.min(floors[finite]))
    # sum(mu_hi) = 0 <= budget <= sum(mu_lo)
    mu_lo = 1.0 / (c_min + budget)
    mu_hi = 1.0 / c_min if c_min > 0 else np.inf
    if not np.isfinite(mu_hi):
        mu_hi = 2.0 * mu_lo + 1.0
        while np.sum(_allocation(mu_hi, floors)) > budget:
            mu_hi *= 2.0

    mu = 0.5 * (mu_lo + mu_hi)
    for it in range(max_iter):
        mu = 0.5 * (mu_lo + mu_hi)
        total = float(np.sum(_allocation(mu, floors)))
        if abs(total - budget) <= tol * budget:
            break
        if total > budget:
            mu_lo = mu
        else:
            mu_hi = mu

    levels = _allocation(mu, floors)
    active = levels > 0
    if not np.any(active):
        # all weight on the strongest channel
        logger.debug("Water level left every channel dry, using the strongest channel only")
        levels = np.zeros_like(floors)
        levels[int(np.argmin(floors))] = budget
        return levels, 1.0 / (c_min + budget)

    # Exact budget on the active set found by bisection
    level = (budget + float(np.sum(floors[active]))) / int(np.sum(active))
    levels = np.where(active, np.maximum(level - floors, 0.0), 0.0)
    levels *= budget / float(np.sum(levels))
    logger.debug(f"Water level found: mu={1.0 / level:.6g}, active={int(np.sum(active))}/{floors.size}")
    return levels, 1.0 / level
