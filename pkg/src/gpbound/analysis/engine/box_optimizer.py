"""
Extrema of ``φ ↦ k(φ, x, x′)`` over an axis-aligned hyperparameter box.

Maximization uses projected gradient ascent in box-normalized coordinates with
an Armijo step-halving line search, started from the upper corner, the center
and a few seeded random points. For pseudo-concave families any first-order
point is the global maximum; the extra starts cover numerically flat regions.

Minimization enumerates the box corners and refines the best corner with
projected descent.
"""
from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass
from enum import Enum
from typing import Any

import numpy as np

from gpbound.analysis.constants import BOX_MAX_ITER, BOX_MULTI_STARTS, BOX_TOL
from gpbound.analysis.domain.candidate_model import HyperRectangle
from gpbound.analysis.domain.kernel_model import KernelFamily
from gpbound.analysis.engine.kernels import kernel_value_and_phi_grad, kernel_values_paired
from gpbound.helper.errors import BoxOptimizationError

_ARMIJO = 1e-4
_MIN_STEP = 1e-16


class BoxMode(str, Enum):
    MAX = "max"
    MIN = "min"


class MaximizerKind(str, Enum):
    """
    How the general bound finds kernel maxima over a box.

    Attributes:
        OPTIMIZE (str): Multi-start projected gradient ascent.
        CORNER (str): Best of the ``2^l`` corners; exact for monotone families.
        GRID (str): Dense grid search (validation only, small ``l``).
    """
    OPTIMIZE = "optimize"
    CORNER = "corner"
    GRID = "grid"


# (family, box, x, x′) -> max over the box
Maximizer = Callable[[KernelFamily, HyperRectangle, np.ndarray, np.ndarray], float]


@dataclass(frozen=True, slots=True, kw_only=True)
class BoxOptimizerConfig:
    """
    Attributes:
        tol (float): First-order tolerance on the projected gradient, in
            box-normalized coordinates.
        max_iter (int): Iteration cap per start.
        n_starts (int): Number of starts (upper corner, center, then random).
        seed (int): Seed for the random starts; every call reuses it so results
            do not depend on evaluation order.
    """
    tol: float = BOX_TOL
    max_iter: int = BOX_MAX_ITER
    n_starts: int = BOX_MULTI_STARTS
    seed: int = 0

    def __post_init__(self) -> None:
        if self.tol <= 0.0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iter < 1 or self.n_starts < 1:
            raise ValueError("max_iter and n_starts must be >= 1")


@dataclass(frozen=True, slots=True)
class _Ascent:
    u: np.ndarray
    value: float
    n_iter: int
    converged: bool
    pg_norm: float


class _Objective:
    """Signed kernel value and gradient in normalized coordinates ``u ∈ [0, 1]^l``."""

    def __init__(self, family: KernelFamily, box: HyperRectangle, x: np.ndarray, x_prime: np.ndarray, sign: float):
        self.family = family
        self.box = box
        self.x = x
        self.x_prime = x_prime
        self.sign = sign
        self.free = box.width > 0.0

    def phi(self, u: np.ndarray) -> np.ndarray:
        return np.where(self.free, self.box.lower + u * self.box.width, self.box.lower)

    def __call__(self, u: np.ndarray) -> tuple[float, np.ndarray]:
        value, grad = kernel_value_and_phi_grad(self.family, self.phi(u), self.x, self.x_prime)
        g = np.where(self.free, grad * self.box.width, 0.0)
        return self.sign * value, self.sign * g


def _projected_gradient(u: np.ndarray, g: np.ndarray) -> np.ndarray:
    return np.clip(u + g, 0.0, 1.0) - u


def _ascend(objective: _Objective, u0: np.ndarray, cfg: BoxOptimizerConfig) -> _Ascent:
    u = np.clip(u0, 0.0, 1.0)
    f, g = objective(u)
    step = 1.0
    for it in range(1, cfg.max_iter + 1):
        pg = float(np.max(np.abs(_projected_gradient(u, g)), initial=0.0))
        if pg <= cfg.tol:
            return _Ascent(u=u, value=f, n_iter=it, converged=True, pg_norm=pg)

        # ---- Armijo step halving along the projection arc ----
        accepted = False
        while step >= _MIN_STEP:
            u_new = np.clip(u + step * g, 0.0, 1.0)
            f_new, g_new = objective(u_new)
            if np.isfinite(f_new) and f_new >= f + _ARMIJO * float(g @ (u_new - u)):
                accepted = True
                break
            step *= 0.5
        if not accepted:
            # no ascent direction left at machine precision
            return _Ascent(u=u, value=f, n_iter=it, converged=True, pg_norm=pg)

        improvement = f_new - f
        u, f, g = u_new, f_new, g_new
        step = min(1.0, 2.0 * step)
        if improvement <= cfg.tol * 1e-6 * max(1.0, abs(f)):
            pg = float(np.max(np.abs(_projected_gradient(u, g)), initial=0.0))
            return _Ascent(u=u, value=f, n_iter=it, converged=True, pg_norm=pg)

    pg = float(np.max(np.abs(_projected_gradient(u, g)), initial=0.0))
    return _Ascent(u=u, value=f, n_iter=cfg.max_iter, converged=pg <= cfg.tol, pg_norm=pg)


def _is_kkt(objective: _Objective, u: np.ndarray, tol: float) -> tuple[bool, float]:
    f, g = objective(u)
    return float(np.max(np.abs(_projected_gradient(u, g)), initial=0.0)) <= tol, f


def maximize_over_box(
        family: KernelFamily,
        box: HyperRectangle,
        x: Any,
        x_prime: Any,
        mode: BoxMode | str = BoxMode.MAX,
        *,
        config: BoxOptimizerConfig | None = None) -> tuple[np.ndarray, float]:
    """
    Finds the extremum of ``k(φ, x, x′)`` over ``φ ∈ box``.

    Args:
        family (KernelFamily): Kernel family; the box must be valid for it.
        box (HyperRectangle): The hyperparameter set.
        x (Any): First input point.
        x_prime (Any): Second input point.
        mode (BoxMode | str): ``max`` or ``min``.
        config (BoxOptimizerConfig | None): Tolerances, caps and starts.

    Returns:
        tuple[np.ndarray, float]: The optimizing φ and the kernel value there.

    Raises:
        BoxOptimizationError: If no start meets the first-order tolerance
            within the iteration cap.
    """
    cfg = config or BoxOptimizerConfig()
    mode = BoxMode(mode)
    xa = np.asarray(x, dtype=float).reshape(-1)
    xb = np.asarray(x_prime, dtype=float).reshape(-1)
    box.validate_for(family)

    if box.is_degenerate:
        value = float(kernel_values_paired(family, box.lower, xa, xb)[0])
        return box.lower.copy(), value

    sign = 1.0 if mode == BoxMode.MAX else -1.0
    objective = _Objective(family, box, xa, xb, sign)

    if mode == BoxMode.MAX:
        starts = [np.ones(box.dim), np.full(box.dim, 0.5)]
    else:
        corners = box.corners()
        values = kernel_values_paired(family, corners, xa, xb)
        best = int(np.argmin(values))
        picks = (corners[best] > box.lower).astype(float)
        starts = [picks]

    # a first-order point at the leading start is global under pseudo-concavity
    ok, f0 = _is_kkt(objective, starts[0], cfg.tol)
    if ok:
        return objective.phi(starts[0]), sign * f0

    if mode == BoxMode.MAX and cfg.n_starts > 2:
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed]))
        starts.extend(rng.random((cfg.n_starts - 2, box.dim)))
    starts = starts[:cfg.n_starts] if mode == BoxMode.MAX else starts

    best_run: _Ascent | None = None
    for u0 in starts:
        run = _ascend(objective, u0, cfg)
        if run.converged and (best_run is None or run.value > best_run.value):
            best_run = run
    if best_run is None:
        raise BoxOptimizationError(
            f"{mode.value} of {family.label} over box did not converge in {cfg.max_iter} iterations",
            diagnostics={
                "family": family.label,
                "lower": box.lower.tolist(),
                "upper": box.upper.tolist(),
                "x": xa.tolist(),
                "x_prime": xb.tolist(),
                "tol": cfg.tol,
            })
    return objective.phi(best_run.u), sign * best_run.value


# ---- maximizers for the general bound ----

def optimize_maximizer(config: BoxOptimizerConfig | None = None) -> Maximizer:
    cfg = config or BoxOptimizerConfig()

    def maximizer(family: KernelFamily, box: HyperRectangle, x: np.ndarray, x_prime: np.ndarray) -> float:
        return maximize_over_box(family, box, x, x_prime, BoxMode.MAX, config=cfg)[1]

    return maximizer


def corner_maximizer(family: KernelFamily, box: HyperRectangle, x: np.ndarray, x_prime: np.ndarray) -> float:
    """Largest kernel value among the box corners."""
    return float(np.max(kernel_values_paired(family, box.corners(), x, x_prime)))
