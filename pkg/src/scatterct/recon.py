"""One-step and two-step scatter correction / density reconstruction.

Both density problems are solved over a preconditioned variable ``rho'``
with ``rho = P rho'`` and ``P = diag(A^T A 1 / max(A^T A 1))^-1``.
TV is applied to ``rho`` itself, i.e. to ``P rho'``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .abel import AbelOperator
from .forward import EXP_THEN_SPIN, SPIN_THEN_EXP, areal_density_from_direct
from .geometry import center_lineout, spin, spin_adjoint, unspin
from .lbfgs import LbfgsConfig, Termination, Trace, minimize
from .scatter import ScatterKernel, convolve, convolve_adjoint

__all__ = [
    "RADIAL_AVERAGE",
    "CENTER_LINEOUT",
    "ReconConfig",
    "Preconditioner",
    "ReconTrace",
    "tv_value_and_subgrad",
    "sqs_preconditioner",
    "descatter",
    "twostep_target",
    "twostep_objective",
    "twostep_reconstruct",
    "fit_density_to_direct",
    "onestep_objective",
    "onestep_model",
    "onestep_reconstruct",
]

RADIAL_AVERAGE = "radial_average"
CENTER_LINEOUT = "center_lineout"


@dataclass(frozen=True)
class ReconConfig:
    xi: float = 1e-3
    alpha: float = 0.0
    learning_rate: float = 1.0
    max_iters: int = 20
    tv_epsilon: float = 1e-6
    precondition: bool = True
    unspin_mode: str = RADIAL_AVERAGE
    order: str = EXP_THEN_SPIN
    memory: int = 10
    wolfe_c1: float = 1e-4
    wolfe_c2: float = 0.9
    max_line_search_evals: int = 25
    grad_tol: float = 1e-10

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if not self.xi > 0:
            raise ValueError("xi must be > 0")
        if self.tv_epsilon < 0:
            raise ValueError("tv_epsilon must be >= 0")
        if self.unspin_mode not in (RADIAL_AVERAGE, CENTER_LINEOUT):
            raise ValueError(f"unknown unspin_mode {self.unspin_mode!r}")
        if self.order not in (EXP_THEN_SPIN, SPIN_THEN_EXP):
            raise ValueError(f"unknown order {self.order!r}")

    def lbfgs(self) -> LbfgsConfig:
        return LbfgsConfig(
            memory=self.memory,
            initial_step=self.learning_rate,
            wolfe_c1=self.wolfe_c1,
            wolfe_c2=self.wolfe_c2,
            max_iters=self.max_iters,
            max_line_search_evals=self.max_line_search_evals,
            grad_tol=self.grad_tol,
        )


@dataclass(frozen=True)
class Preconditioner:
    diag: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.diag, dtype=np.float64)
        if d.ndim != 1 or not np.all(np.isfinite(d)) or np.any(d <= 0):
            raise ValueError("preconditioner diagonal must be finite and positive")
        d.setflags(write=False)
        object.__setattr__(self, "diag", d)

    @classmethod
    def identity(cls, n: int) -> "Preconditioner":
        return cls(np.ones(n))


@dataclass
class ReconTrace:
    """Per accepted iterate: data fidelity, total objective and step length."""

    iteration: list = field(default_factory=list)
    data_fidelity: list = field(default_factory=list)
    total_objective: list = field(default_factory=list)
    step_length: list = field(default_factory=list)
    reason: Optional[Termination] = None
    optimizer: Optional[Trace] = None
    descatter: Optional[Trace] = None  # two-step only: step-1 optimizer trace

    def __len__(self):
        return len(self.iteration)

    @property
    def line_search_failed(self) -> bool:
        return self.reason == Termination.LINE_SEARCH_FAILURE or (
            self.descatter is not None
            and self.descatter.reason == Termination.LINE_SEARCH_FAILURE
        )

    def rows(self):
        return list(zip(self.iteration, self.data_fidelity, self.total_objective, self.step_length))


def tv_value_and_subgrad(profile: np.ndarray, epsilon: float = 0.0):
    """Smoothed total variation ``sum sqrt(du^2 + eps^2) - eps`` and its gradient.

    ``epsilon = 0`` gives plain ``sum |du|`` with ``sign(0) = 0``.
    """
    rho = np.asarray(profile, dtype=np.float64)
    if rho.ndim != 1 or rho.size < 2:
        raise ValueError("profile must be 1D with length >= 2")
    du = np.diff(rho)
    if epsilon > 0:
        root = np.sqrt(du * du + epsilon * epsilon)
        value = float(np.sum(root - epsilon))
        dphi = du / root
    else:
        value = float(np.sum(np.abs(du)))
        dphi = np.sign(du)
    grad = np.zeros_like(rho)
    grad[1:] += dphi
    grad[:-1] -= dphi
    return value, grad


def sqs_preconditioner(op) -> Preconditioner:
    """``diag(v / max v)^-1`` with ``v = A^T A 1``.

    ``op`` is an :class:`AbelOperator` or anything with a 2D ``matrix``.
    """
    mat = np.asarray(op.matrix, dtype=np.float64)
    v = mat.T @ (mat @ np.ones(mat.shape[1]))
    if not np.all(np.isfinite(v)) or np.any(v <= 0):
        raise RuntimeError("degenerate operator: A^T A 1 has non-positive entries")
    v = v / v.max()
    return Preconditioner(1.0 / v)


def _precond(op: AbelOperator, cfg: ReconConfig) -> Preconditioner:
    return sqs_preconditioner(op) if cfg.precondition else Preconditioner.identity(op.n)


def _kpi(image, kernel):
    return convolve(image, kernel) + image


def _kpi_adjoint(image, kernel):
    return convolve_adjoint(image, kernel) + image


def descatter(t: np.ndarray, kernel: ScatterKernel, cfg: ReconConfig):
    """Least-squares direct estimate ``argmin_d ||t - (K + I) d||^2`` from ``d = t``.

    Returns ``(d, trace)``; ``cfg.alpha`` is ignored.
    """
    t = np.asarray(t, dtype=np.float64)
    shape = t.shape

    def fun(x):
        d = x.reshape(shape)
        r = _kpi(d, kernel) - t
        return float(np.sum(r * r)), (2.0 * _kpi_adjoint(r, kernel)).ravel()

    x, trace = minimize(fun, t.ravel(), cfg.lbfgs())
    return x.reshape(shape), trace


def twostep_target(direct: np.ndarray, cfg: ReconConfig) -> np.ndarray:
    """1D areal-density target from a (descattered) direct image."""
    areal = areal_density_from_direct(direct, cfg.xi)
    if cfg.unspin_mode == RADIAL_AVERAGE:
        return unspin(areal)
    return center_lineout(areal)


def twostep_objective(rho_prime, target, op: AbelOperator, P: Preconditioner, cfg: ReconConfig):
    """``||a* - A P rho'||^2 + alpha TV(P rho')`` and its gradient in ``rho'``."""
    value, grad, _ = _twostep_terms(rho_prime, target, op, P, cfg)
    return value, grad


def _twostep_terms(rho_prime, target, op, P, cfg):
    p = P.diag
    rho = p * rho_prime
    r = target - op.matrix @ rho
    fid = float(r @ r)
    grad = -2.0 * (op.matrix.T @ r)
    value = fid
    if cfg.alpha > 0:
        tv, tv_grad = tv_value_and_subgrad(rho, cfg.tv_epsilon)
        value += cfg.alpha * tv
        grad = grad + cfg.alpha * tv_grad
    return value, p * grad, fid


def onestep_model(rho: np.ndarray, kernel: ScatterKernel, op: AbelOperator, cfg: ReconConfig):
    """Noise-free total transmission ``(K + I) d(rho)`` plus the pieces needed
    for the gradient: ``(model, e, support)``."""
    a = op.matrix @ rho
    with np.errstate(over="ignore", invalid="ignore"):
        if cfg.order == EXP_THEN_SPIN:
            e = np.exp(-cfg.xi * a)
            d = spin(e)
            support = None
        else:
            support = spin(np.ones(op.n))
            e = np.exp(-cfg.xi * spin(a)) * support
            d = e
        return _kpi(d, kernel), e, support


def onestep_objective(
    rho_prime, t, kernel: ScatterKernel, op: AbelOperator, P: Preconditioner, cfg: ReconConfig
):
    """``||t - (K + I) exp(-xi A P rho')||^2 + alpha TV(P rho')`` and its gradient.

    Overflowing iterates give an infinite value, which the line search
    treats as an overshoot.
    """
    value, grad, _ = _onestep_terms(rho_prime, t, kernel, op, P, cfg)
    return value, grad


def _onestep_terms(rho_prime, t, kernel, op, P, cfg):
    p = P.diag
    rho = p * np.asarray(rho_prime, dtype=np.float64)
    model, e, _ = onestep_model(rho, kernel, op, cfg)
    with np.errstate(over="ignore", invalid="ignore"):
        r = model - t
        fid = float(np.sum(r * r))
        if not np.isfinite(fid):
            return np.inf, np.full_like(rho, np.nan), np.inf
        back = _kpi_adjoint(r, kernel)
        if cfg.order == EXP_THEN_SPIN:
            da = -cfg.xi * e * spin_adjoint(back)
        else:
            da = -cfg.xi * spin_adjoint(e * back)
        grad = 2.0 * (op.matrix.T @ da)
    value = fid
    if cfg.alpha > 0:
        tv, tv_grad = tv_value_and_subgrad(rho, cfg.tv_epsilon)
        value += cfg.alpha * tv
        grad = grad + cfg.alpha * tv_grad
    return value, p * grad, fid


def _solve(objective, n: int, cfg: ReconConfig, P: Preconditioner):
    fids = {}

    def fun(x):
        value, grad, fid = objective(x)
        fids[x.tobytes()] = fid
        return value, grad

    trace = ReconTrace()

    def record(k, x):
        key = x.tobytes()
        fid = fids[key] if key in fids else objective(x)[2]
        trace.iteration.append(k)
        trace.data_fidelity.append(fid)

    x, opt_trace = minimize(fun, np.zeros(n), cfg.lbfgs(), callback=record)
    trace.total_objective = [r.objective for r in opt_trace.records]
    trace.step_length = [r.step_length for r in opt_trace.records]
    trace.reason = opt_trace.reason
    trace.optimizer = opt_trace
    return P.diag * x, trace


def twostep_reconstruct(
    t: np.ndarray,
    kernel: ScatterKernel,
    op: AbelOperator,
    cfg: ReconConfig,
    descatter_cfg: Optional[ReconConfig] = None,
):
    """Descatter, log-invert, then fit the density to the areal-density lineout.

    ``cfg`` drives the density fit; ``descatter_cfg`` the first step
    (defaults to ``cfg`` with ``alpha = 0``). Returns ``(rho, trace)``; the
    step-1 optimizer trace is ``trace.descatter``.
    """
    if descatter_cfg is None:
        descatter_cfg = replace(cfg, alpha=0.0)
    d_star, step1 = descatter(t, kernel, descatter_cfg)
    rho, trace = fit_density_to_direct(d_star, op, cfg)
    trace.descatter = step1
    return rho, trace


def fit_density_to_direct(direct: np.ndarray, op: AbelOperator, cfg: ReconConfig):
    """Second step alone: log-invert ``direct``, reduce to 1D, fit the density."""
    target = twostep_target(direct, cfg)
    P = _precond(op, cfg)
    return _solve(lambda x: _twostep_terms(x, target, op, P, cfg), op.n, cfg, P)


def onestep_reconstruct(t: np.ndarray, kernel: ScatterKernel, op: AbelOperator, cfg: ReconConfig):
    """Joint fit of the density through the full scatter + attenuation model."""
    t = np.asarray(t, dtype=np.float64)
    P = _precond(op, cfg)
    return _solve(lambda x: _onestep_terms(x, t, kernel, op, P, cfg), op.n, cfg, P)
