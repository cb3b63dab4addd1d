"""
Scalar Search
=============

Maximizers for one-dimensional efficiency curves η(ΓT). Searches run in
log ΓT because the optima of interest span three decades.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Tuple
import logging
import math

import numpy as np
from scipy import optimize as sp_optimize

import config
from fid_memory.errors import DomainError

logger = logging.getLogger(__name__)


@dataclass
class SearchResult:
    """Best point of a scalar search plus every evaluation made"""
    x_opt: float
    f_opt: float
    history: List[Tuple[float, float]] = field(default_factory=list)
    method: str = 'golden'
    unimodal: bool = True
    at_edge: bool = False

    @property
    def n_evaluations(self) -> int:
        return len(self.history)


class _Recorder:
    """Caches f(x) and keeps evaluation order"""

    def __init__(self, f: Callable[[float], float]):
        self.f = f
        self.cache: Dict[float, float] = {}
        self.history: List[Tuple[float, float]] = []

    def __call__(self, x: float) -> float:
        x = float(x)
        if x not in self.cache:
            value = float(self.f(x))
            self.cache[x] = value
            self.history.append((x, value))
        return self.cache[x]


def _check_bracket(lo: float, hi: float):
    if not (lo > 0 and hi > lo):
        raise DomainError(f"bracket must satisfy 0 < lo < hi, got ({lo}, {hi})")


def is_unimodal(values: np.ndarray, slack: float = 1e-9) -> bool:
    """True when the sampled curve rises to a single peak and then falls"""
    peak = int(np.argmax(values))
    rising = np.all(np.diff(values[:peak + 1]) >= -slack)
    falling = np.all(np.diff(values[peak:]) <= slack)
    return bool(rising and falling)


def dense_scan(f: Callable[[float], float], lo: float, hi: float, n: int = 64) -> SearchResult:
    """Evaluate f on n log-spaced points of [lo, hi] and keep the best"""
    _check_bracket(lo, hi)
    if n < 2:
        raise DomainError(f"dense scan needs at least 2 points, got {n}")
    recorder = _Recorder(f)
    xs = np.geomspace(lo, hi, n)
    values = np.array([recorder(x) for x in xs])
    best = int(np.argmax(values))
    return SearchResult(
        x_opt=float(xs[best]),
        f_opt=float(values[best]),
        history=recorder.history,
        method='dense',
        unimodal=is_unimodal(values),
        at_edge=best in (0, n - 1),
    )


def golden_section_maximize(f: Callable[[float], float],
                            lo: float,
                            hi: float,
                            rel_tol: float = config.OPTIMIZER_SETTINGS['relative_tolerance'],
                            prescan_points: int = config.OPTIMIZER_SETTINGS['prescan_points'],
                            dense_points: int = 64) -> SearchResult:
    """
    Maximize f on [lo, hi] by golden-section search in log x.

    A coarse log-spaced pre-scan locates the peak and checks unimodality. The
    three scan points around the peak seed scipy's golden-section minimizer,
    which stops once the bracket is narrower than `rel_tol` relative in x.
    A non-unimodal pre-scan falls back to a dense scan; a peak on the bracket
    edge is returned as is with `at_edge` set.

    Args:
        f: Function to maximize (one evaluation may be a full solver run)
        lo, hi: Positive search bracket
        rel_tol: Relative bracket width at termination
        prescan_points: Points of the unimodality pre-scan
        dense_points: Points of the fallback scan

    Returns:
        SearchResult with the full evaluation history
    """
    _check_bracket(lo, hi)
    recorder = _Recorder(f)

    xs = np.geomspace(lo, hi, prescan_points)
    values = np.array([recorder(x) for x in xs])

    if not np.any(values > 0):
        logger.debug("objective vanishes on the whole bracket")
        return SearchResult(float(xs[0]), 0.0, recorder.history, method='prescan')

    if not is_unimodal(values):
        logger.warning("pre-scan of %d points is not unimodal, falling back to dense scan",
                       prescan_points)
        dense = dense_scan(recorder, lo, hi, dense_points)
        dense.history = recorder.history
        dense.unimodal = False
        return dense

    peak = int(np.argmax(values))
    if peak in (0, len(xs) - 1):
        logger.warning("maximum sits on the bracket edge at x=%.4g", xs[peak])
        return SearchResult(float(xs[peak]), float(values[peak]), recorder.history,
                            method='prescan', at_edge=True)

    u = np.log(xs[peak - 1:peak + 2])
    if values[peak] <= max(values[peak - 1], values[peak + 1]):
        # flat top; the scan point is already as good as the neighbourhood resolves
        return SearchResult(float(xs[peak]), float(values[peak]), recorder.history,
                            method='prescan')

    def negated(log_x: float) -> float:
        return -recorder(math.exp(log_x))

    xtol = rel_tol / (2.0 * max(abs(u[1]), 1.0))
    result = sp_optimize.minimize_scalar(negated, bracket=tuple(u), method='golden',
                                         options={'xtol': xtol})

    best_x, best_f = max(recorder.history, key=lambda item: item[1])
    logger.debug("golden section finished after %d evaluations: x=%.5g f=%.6f",
                 len(recorder.history), best_x, best_f)
    if not getattr(result, 'success', True):
        logger.warning("golden section did not converge: %s", getattr(result, 'message', ''))
    return SearchResult(best_x, best_f, recorder.history, method='golden')
