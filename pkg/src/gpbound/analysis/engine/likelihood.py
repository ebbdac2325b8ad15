"""
Log marginal likelihood, its gradient in log-hyperparameter coordinates and
multi-start type-II maximum-likelihood fitting.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.optimize import minimize

from gpbound.analysis.constants import (
    DEFAULT_LOG_PHI_BOX,
    DEFAULT_RESTARTS,
    FIT_LOG_PHI_BOUNDS,
    FIT_MAX_ITER,
)
from gpbound.analysis.domain.kernel_model import KernelFamily, KernelSpec
from gpbound.analysis.domain.report_model import FitDiagnostics, FitRestart
from gpbound.analysis.engine.gp_model import factorize_gram
from gpbound.analysis.engine.kernels import kernel_matrix_grad
from gpbound.analysis.lifecycle.audit.run_event_model import EventType, LevelType, StageType, record_event
from gpbound.helper.errors import FitFailedError, GpBoundError

_LOG_2PI = float(np.log(2.0 * np.pi))
_FAIL_VALUE = 1e25


@dataclass(frozen=True, slots=True, kw_only=True)
class FitConfig:
    """
    Settings of the multi-start optimizer.

    Attributes:
        restarts (int): Number of starting points, at least 1.
        log_phi_box (tuple[float, float]): Box in ``log φ`` that starts are drawn
            from (log-uniformly in φ).
        log_phi_bounds (tuple[float, float]): Optimizer bounds in ``log φ``.
        max_iter (int): Iteration limit per restart.
    """
    restarts: int = DEFAULT_RESTARTS
    log_phi_box: tuple[float, float] = DEFAULT_LOG_PHI_BOX
    log_phi_bounds: tuple[float, float] = FIT_LOG_PHI_BOUNDS
    max_iter: int = FIT_MAX_ITER

    def __post_init__(self) -> None:
        if self.restarts < 1:
            raise ValueError(f"restarts must be >= 1, got {self.restarts}")
        if self.log_phi_box[0] > self.log_phi_box[1]:
            raise ValueError(f"invalid start box {self.log_phi_box}")


@dataclass(frozen=True, slots=True, kw_only=True)
class FitResult:
    spec: KernelSpec
    diagnostics: FitDiagnostics = field(default_factory=lambda: FitDiagnostics(log_likelihood=float("nan")))

    @property
    def log_likelihood(self) -> float:
        return self.diagnostics.log_likelihood


def _column(y: Any) -> np.ndarray:
    return np.asarray(y, dtype=float).reshape(-1)


def log_marginal_likelihood(spec: KernelSpec, X: Any, y: Any, noise_var: float) -> float:
    """
    ``log p(y | X, φ) = -½ yᵀK⁻¹y - ½ log det K - (m/2) log 2π`` with the log
    determinant taken from the Cholesky factor.

    Args:
        spec (KernelSpec): Kernel and hyperparameters.
        X (Any): Inputs, shape ``(m, n_x)``.
        y (Any): One output column, length ``m``.
        noise_var (float): Noise variance on the Gram diagonal.

    Returns:
        float: The log marginal likelihood.

    Raises:
        IllConditionedGramError: If the Gram matrix cannot be factorized.
    """
    value, _ = lml_and_log_grad(spec, X, y, noise_var, want_grad=False)
    return value


def lml_and_log_grad(
        spec: KernelSpec,
        X: Any,
        y: Any,
        noise_var: float,
        *,
        want_grad: bool = True) -> tuple[float, np.ndarray]:
    """
    Log marginal likelihood and its gradient with respect to ``log φ``.

    The gradient is ``½ tr((ααᵀ - K⁻¹) ∂K/∂φ_j) · φ_j`` with ``α = K⁻¹y``.

    Returns:
        tuple[float, np.ndarray]: Value and gradient of shape ``(l,)`` (empty
        when ``want_grad`` is False).
    """
    yv = _column(y)
    m = yv.shape[0]
    k, dk = kernel_matrix_grad(spec, X)
    k[np.diag_indices_from(k)] += float(noise_var)
    factor = factorize_gram(k, noise_var)
    alpha = factor.solve(yv)
    value = -0.5 * float(yv @ alpha) - 0.5 * factor.log_det() - 0.5 * m * _LOG_2PI
    if not want_grad:
        return value, np.zeros(0)
    k_inv = factor.solve(np.eye(m))
    inner = np.outer(alpha, alpha) - k_inv
    grad_phi = 0.5 * np.einsum("ij,lji->l", inner, dk)
    return value, grad_phi * spec.phi


def fit_hyperparameters(
        family: KernelFamily,
        X: Any,
        y: Any,
        noise_var: float,
        *,
        rng: np.random.Generator,
        config: FitConfig | None = None) -> FitResult:
    """
    Maximizes the log marginal likelihood from several log-uniform starts.

    Each restart runs L-BFGS-B on the negative log likelihood in ``log φ``
    coordinates; the best local optimum wins. Restarts whose Gram matrix
    cannot be factorized are recorded as failed.

    Args:
        family (KernelFamily): Family to fit.
        X (Any): Inputs, shape ``(m, n_x)``.
        y (Any): One output column, length ``m``.
        noise_var (float): Fixed noise variance.
        rng (np.random.Generator): Source of the starting points.
        config (FitConfig | None): Optimizer settings.

    Returns:
        FitResult: The fitted spec and a restart table.

    Raises:
        FitFailedError: If every restart failed.
    """
    cfg = config or FitConfig()
    yv = _column(y)
    n_hyper = family.n_hyper
    lo_b, hi_b = cfg.log_phi_bounds
    lo_b = max(lo_b, float(np.log(family.phi_floor))) if family.phi_floor > 0 else lo_b
    bounds = [(lo_b, hi_b)] * n_hyper
    starts = rng.uniform(cfg.log_phi_box[0], cfg.log_phi_box[1], size=(cfg.restarts, n_hyper))

    def family_spec(theta: np.ndarray) -> KernelSpec:
        return KernelSpec(family=family, phi=np.exp(np.clip(theta, lo_b, hi_b)))

    def objective(theta: np.ndarray) -> tuple[float, np.ndarray]:
        try:
            value, grad = lml_and_log_grad(family_spec(theta), X, yv, noise_var)
        except GpBoundError:
            return _FAIL_VALUE, np.zeros(n_hyper)
        if not np.isfinite(value) or not np.all(np.isfinite(grad)):
            return _FAIL_VALUE, np.zeros(n_hyper)
        return -value, -grad

    restarts: list[FitRestart] = []
    best_index, best_value, best_theta = -1, -np.inf, None
    for idx, start in enumerate(starts):
        f0, _ = objective(start)
        if f0 >= _FAIL_VALUE:
            restarts.append(FitRestart(
                start_phi=tuple(np.exp(start).tolist()),
                end_phi=tuple(np.exp(start).tolist()),
                log_likelihood=float("-inf"),
                success=False,
                message="Gram matrix not positive definite at start"))
            continue
        res = minimize(
            objective,
            start,
            jac=True,
            method="L-BFGS-B",
            bounds=bounds,
            options={"maxiter": cfg.max_iter})
        ok = bool(np.isfinite(res.fun) and res.fun < _FAIL_VALUE)
        ll = -float(res.fun) if ok else float("-inf")
        restarts.append(FitRestart(
            start_phi=tuple(np.exp(start).tolist()),
            end_phi=tuple(np.exp(res.x).tolist()),
            log_likelihood=ll,
            success=ok,
            message=str(res.message)))
        if ok and ll > best_value:
            best_index, best_value, best_theta = idx, ll, res.x

    if best_theta is None:
        record_event(
            StageType.FIT,
            EventType.FAIL,
            LevelType.ERROR,
            message=f"all {cfg.restarts} restarts failed for {family.label}")
        raise FitFailedError(f"all {cfg.restarts} restarts failed to produce a positive definite Gram matrix")

    spec = family_spec(best_theta)
    record_event(
        StageType.FIT,
        EventType.CHECKPOINT,
        message=f"fitted {family.label}",
        payload={"phi": spec.phi.tolist(), "log_likelihood": best_value, "best_restart": best_index})
    return FitResult(
        spec=spec,
        diagnostics=FitDiagnostics(
            log_likelihood=best_value,
            restarts=tuple(restarts),
            best_index=best_index))
