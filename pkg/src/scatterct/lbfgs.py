"""Limited-memory BFGS with a strong-Wolfe line search.

The line search follows Nocedal & Wright (Algorithms 3.5 and 3.6): an
extrapolation phase that grows the step until the minimum is bracketed,
then a zoom phase driven by safeguarded cubic interpolation.
Every outer iteration starts the line search at ``initial_step``.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

__all__ = [
    "LbfgsConfig",
    "Termination",
    "IterationRecord",
    "Trace",
    "LineSearchResult",
    "strong_wolfe",
    "minimize",
]

Objective = Callable[[np.ndarray], "tuple[float, np.ndarray]"]

CURVATURE_TOL = 1e-10


@dataclass(frozen=True)
class LbfgsConfig:
    memory: int = 10
    initial_step: float = 1.0
    wolfe_c1: float = 1e-4
    wolfe_c2: float = 0.9
    max_iters: int = 100
    max_line_search_evals: int = 25
    grad_tol: float = 1e-10

    def __post_init__(self):
        if not 0 < self.wolfe_c1 < self.wolfe_c2 < 1:
            raise ValueError("need 0 < wolfe_c1 < wolfe_c2 < 1")
        if self.memory < 1:
            raise ValueError("memory must be >= 1")
        if not self.initial_step > 0:
            raise ValueError("initial_step must be > 0")
        if self.max_iters < 0 or self.max_line_search_evals < 1:
            raise ValueError("iteration limits must be positive")
        if self.grad_tol < 0:
            raise ValueError("grad_tol must be >= 0")


class Termination(str, Enum):
    MAX_ITERS = "max_iters"
    GRAD_TOL = "grad_tol"
    LINE_SEARCH_FAILURE = "line_search_failure"


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    objective: float
    grad_norm: float
    step_length: float
    fevals: int


@dataclass
class Trace:
    records: list = field(default_factory=list)
    reason: Optional[Termination] = None

    def __len__(self):
        return len(self.records)

    @property
    def objectives(self) -> np.ndarray:
        return np.array([r.objective for r in self.records])

    @property
    def iterations(self) -> int:
        return len(self.records) - 1

    @property
    def total_fevals(self) -> int:
        return sum(r.fevals for r in self.records)


@dataclass
class LineSearchResult:
    step: float
    x: np.ndarray
    f: float
    g: np.ndarray
    evals: int
    wolfe: bool  # strong Wolfe conditions met, not just sufficient decrease
    decreased: bool = True


def _cubic_min(x1, f1, g1, x2, f2, g2, lo=None, hi=None):
    """Minimizer of the cubic matching values and slopes at two points."""
    if lo is None:
        lo, hi = (x1, x2) if x1 <= x2 else (x2, x1)
    vals = (x1, f1, g1, x2, f2, g2)
    if not all(math.isfinite(v) for v in vals):
        return 0.5 * (lo + hi)
    d1 = g1 + g2 - 3.0 * (f1 - f2) / (x1 - x2)
    d2_sq = d1 * d1 - g1 * g2
    if d2_sq < 0:
        return 0.5 * (lo + hi)
    d2 = math.sqrt(d2_sq)
    if x1 <= x2:
        t = x2 - (x2 - x1) * ((g2 + d2 - d1) / (g2 - g1 + 2.0 * d2))
    else:
        t = x1 - (x1 - x2) * ((g1 + d2 - d1) / (g1 - g2 + 2.0 * d2))
    if not math.isfinite(t):
        return 0.5 * (lo + hi)
    return min(max(t, lo), hi)


def strong_wolfe(
    fun: Objective,
    x: np.ndarray,
    f: float,
    g: np.ndarray,
    d: np.ndarray,
    step: float,
    c1: float = 1e-4,
    c2: float = 0.9,
    max_evals: int = 25,
) -> LineSearchResult:
    """Search along ``d`` from ``x``.

    ``decreased`` is False (and ``x`` is the start point) when no step gave
    sufficient decrease.
    Non-finite objective values are treated as an overshoot.
    """
    gtd = float(g @ d)
    d_scale = float(np.max(np.abs(d)))
    x_scale = 1.0 + float(np.max(np.abs(x)))

    def probe(t):
        xt = x + t * d
        ft, gt = fun(xt)
        ft = float(ft)
        if not math.isfinite(ft) or not np.all(np.isfinite(gt)):
            return xt, math.inf, gt, math.nan
        return xt, ft, gt, float(gt @ d)

    evals = 0
    t_prev, f_prev, gtd_prev = 0.0, f, gtd
    best = None  # (t, x, f, g) of best sufficient-decrease point
    bracket = None
    t = step
    while evals < max_evals:
        xt, ft, gt, gtdt = probe(t)
        evals += 1
        if ft > f + c1 * t * gtd or (evals > 1 and ft >= f_prev):
            bracket = [(t_prev, f_prev, gtd_prev), (t, ft, gtdt)]
            break
        best = (t, xt, ft, gt)
        if abs(gtdt) <= -c2 * gtd:
            return LineSearchResult(t, xt, ft, gt, evals, True)
        if gtdt >= 0:
            bracket = [(t, ft, gtdt), (t_prev, f_prev, gtd_prev)]
            break
        t_next = _cubic_min(
            t_prev, f_prev, gtd_prev, t, ft, gtdt, lo=t + 0.01 * (t - t_prev), hi=10.0 * t
        )
        t_prev, f_prev, gtd_prev = t, ft, gtdt
        t = t_next

    if bracket is not None:
        # zoom: bracket[0] is the low end (satisfies sufficient decrease)
        lo, hi = bracket
        if lo[1] > hi[1]:
            lo, hi = hi, lo
        insufficient = False
        while evals < max_evals:
            a, b = lo[0], hi[0]
            width = abs(b - a)
            if width * d_scale < 1e-14 * x_scale:
                break
            t = _cubic_min(lo[0], lo[1], lo[2], hi[0], hi[1], hi[2])
            left, right = min(a, b), max(a, b)
            margin = 0.1 * width
            if min(right - t, t - left) < margin:
                if insufficient or t >= right or t <= left:
                    t = right - margin if abs(t - right) < abs(t - left) else left + margin
                    insufficient = False
                else:
                    insufficient = True
            else:
                insufficient = False
            xt, ft, gt, gtdt = probe(t)
            evals += 1
            if ft > f + c1 * t * gtd or ft >= lo[1]:
                hi = (t, ft, gtdt)
            else:
                best = (t, xt, ft, gt)
                if abs(gtdt) <= -c2 * gtd:
                    return LineSearchResult(t, xt, ft, gt, evals, True)
                if gtdt * (hi[0] - lo[0]) >= 0:
                    hi = lo
                lo = (t, ft, gtdt)

    if best is None or not best[2] < f:
        return LineSearchResult(0.0, x, f, g, evals, False, decreased=False)
    t, xt, ft, gt = best
    return LineSearchResult(t, xt, ft, gt, evals, False)


def _two_loop(g: np.ndarray, pairs) -> np.ndarray:
    q = g.copy()
    alphas = []
    for s, y, rho in reversed(pairs):
        a = rho * (s @ q)
        alphas.append(a)
        q -= a * y
    if pairs:
        s, y, _ = pairs[-1]
        q *= (s @ y) / (y @ y)
    for (s, y, rho), a in zip(pairs, reversed(alphas)):
        b = rho * (y @ q)
        q += (a - b) * s
    return -q


def minimize(
    fun: Objective,
    x0: np.ndarray,
    cfg: LbfgsConfig = LbfgsConfig(),
    callback: Optional[Callable[[int, np.ndarray], None]] = None,
) -> "tuple[np.ndarray, Trace]":
    """Minimize ``fun`` (returning value and gradient) from ``x0``.

    ``callback(iteration, x)`` is invoked at ``x0`` and after every accepted
    step. When a line search fails along the quasi-Newton direction the
    memory is dropped and steepest descent is tried once before giving up.
    """
    x = np.array(x0, dtype=np.float64)
    f, g = fun(x)
    f = float(f)
    g = np.asarray(g, dtype=np.float64)
    if not math.isfinite(f) or not np.all(np.isfinite(g)):
        raise ValueError("objective is not finite at the starting point")

    trace = Trace()
    gnorm = float(np.linalg.norm(g))
    trace.records.append(IterationRecord(0, f, gnorm, 0.0, 1))
    if callback is not None:
        callback(0, x)
    if gnorm <= cfg.grad_tol:
        trace.reason = Termination.GRAD_TOL
        return x, trace

    pairs: deque = deque(maxlen=cfg.memory)
    trace.reason = Termination.MAX_ITERS
    for k in range(1, cfg.max_iters + 1):
        d = _two_loop(g, pairs)
        if not g @ d < 0:
            pairs.clear()
            d = -g
        ls = strong_wolfe(
            fun, x, f, g, d, cfg.initial_step,
            cfg.wolfe_c1, cfg.wolfe_c2, cfg.max_line_search_evals,
        )
        evals = ls.evals
        if not ls.decreased and pairs:
            pairs.clear()
            ls = strong_wolfe(
                fun, x, f, g, -g, cfg.initial_step,
                cfg.wolfe_c1, cfg.wolfe_c2, cfg.max_line_search_evals,
            )
            evals += ls.evals
        if not ls.decreased:
            trace.reason = Termination.LINE_SEARCH_FAILURE
            break
        s = ls.x - x
        y = ls.g - g
        sy = float(s @ y)
        if sy > CURVATURE_TOL * np.linalg.norm(s) * np.linalg.norm(y):
            pairs.append((s, y, 1.0 / sy))
        x, f, g = ls.x, ls.f, ls.g
        gnorm = float(np.linalg.norm(g))
        trace.records.append(IterationRecord(k, f, gnorm, ls.step, evals))
        if callback is not None:
            callback(k, x)
        if gnorm <= cfg.grad_tol:
            trace.reason = Termination.GRAD_TOL
            break
    return x, trace
