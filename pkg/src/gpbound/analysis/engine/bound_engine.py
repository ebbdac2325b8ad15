"""
Exact mean-square prediction error of a misspecified GP and its upper bounds
when the true kernel is only known to lie in a candidate set.

For output ``i``, test point ``x*`` and weights ``h = K̂⁻¹ k̂(x*)`` of the
estimated model, the exact error is

    k(x*, x*) - 2 hᵀ k(x*, X) + hᵀ K h

with the true kernel ``k`` and the true Gram matrix ``K`` (noise included).
The general bound replaces each of the three terms by a worst case over the
candidate set using box maxima of the kernels; the closed-form bound does the
same with box-corner evaluations only.
"""
from __future__ import annotations

import threading
from collections.abc import Iterator
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from operator import attrgetter
from typing import Any

import numpy as np
from cachetools import Cache, LRUCache, cachedmethod

from gpbound.analysis.constants import H_ZERO_THRESHOLD, MAX_CACHE_ENTRIES
from gpbound.analysis.domain.candidate_model import CandidateEntry, CandidateSet
from gpbound.analysis.domain.report_model import BoundReport
from gpbound.analysis.engine.box_optimizer import Maximizer, corner_maximizer, optimize_maximizer
from gpbound.analysis.engine.gp_model import GpModel, posterior
from gpbound.analysis.engine.kernels import kernel_eval, kernel_matrix
from gpbound.analysis.lifecycle.audit.run_event_model import EventType, StageType, record_event
from gpbound.helper.errors import AssumptionCertificateError, KernelDomainError

DEFAULT_MAXIMIZER: Maximizer = optimize_maximizer()


class BoundMethod(str, Enum):
    THM1 = "thm1"
    THM2 = "thm2"
    BOTH = "both"

    @property
    def wants_thm1(self) -> bool:
        return self in (BoundMethod.THM1, BoundMethod.BOTH)

    @property
    def wants_thm2(self) -> bool:
        return self in (BoundMethod.THM2, BoundMethod.BOTH)


# --------------------------------------------------------------------------- #
# Training-pair kernel matrices, shared by every test point
# --------------------------------------------------------------------------- #

def _x_key(X: np.ndarray) -> tuple:
    return X.shape, X.tobytes()


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(kw_only=True)
class PairwiseKernelCache:
    """
    Memoizes the ``m x m`` kernel matrices over training-input pairs that the
    bounds need for every test point: the candidate-set maxima used by the
    general bound and the corner Gram matrices used by the closed form.

    Thread-safe; cached arrays are read-only.

    Attributes:
        maxsize (int): Number of matrices kept.
    """
    maxsize: int = MAX_CACHE_ENTRIES

    _cache: Cache = field(init=False, repr=False)
    _lock: threading.RLock = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._cache = LRUCache(maxsize=self.maxsize)
        self._lock = threading.RLock()

    def clear(self) -> None:
        with self._lock:
            self._cache.clear()

    @cachedmethod(
        attrgetter("_cache"),
        key=lambda self, cands, X, maximizer: ("kmax", cands.cache_token(), _x_key(X), maximizer),
        lock=attrgetter("_lock"))
    def kmax_matrix(self, cands: CandidateSet, X: np.ndarray, maximizer: Maximizer) -> np.ndarray:
        """``M[q, p] = kmax(cands, X[q], X[p])``, symmetric, noise excluded."""
        m = X.shape[0]
        if maximizer is corner_maximizer:
            out = np.full((m, m), -np.inf)
            for entry in cands:
                for corner in entry.box.corners():
                    out = np.maximum(out, kernel_matrix(entry.spec_at(corner), X))
            return _frozen(out)
        out = np.zeros((m, m))
        for q in range(m):
            for p in range(q, m):
                out[q, p] = out[p, q] = max(maximizer(e.family, e.box, X[q], X[p]) for e in cands)
        return _frozen(out)

    @cachedmethod(
        attrgetter("_cache"),
        key=lambda self, entry, X: (
            "corners", entry.family, entry.box.lower.tobytes(), entry.box.upper.tobytes(), _x_key(X)),
        lock=attrgetter("_lock"))
    def corner_grams(self, entry: CandidateEntry, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Noise-free Gram matrices at the upper and lower box corners."""
        return (_frozen(kernel_matrix(entry.upper_spec, X)),
                _frozen(kernel_matrix(entry.lower_spec, X)))


PAIRWISE_CACHE = PairwiseKernelCache()


# --------------------------------------------------------------------------- #
# Shared helpers
# --------------------------------------------------------------------------- #

def as_point(x_star: Any, n_x: int) -> np.ndarray:
    x = np.asarray(x_star, dtype=float).reshape(-1)
    if x.shape[0] != n_x:
        raise KernelDomainError(f"test point has dimension {x.shape[0]}, model expects {n_x}")
    return x


def weight_vector(estimate: GpModel, i: int, x_star: Any) -> np.ndarray:
    """``hⁱ = K̂ⁱ⁻¹ k̂ⁱ(x*, X)`` with entries below 1e-14 in magnitude set to zero."""
    h = estimate.weight_vector(i, x_star)
    return np.where(np.abs(h) < H_ZERO_THRESHOLD, 0.0, h)


def check_input_domain(cands: CandidateSet, X: np.ndarray, x: np.ndarray) -> None:
    for entry in cands:
        constraint = entry.family.input_constraint
        constraint.check(X, "training input")
        constraint.check(x, "test point")


def check_model_pair(truth: GpModel, estimate: GpModel) -> None:
    if truth.n_y != estimate.n_y or truth.n_x != estimate.n_x:
        raise KernelDomainError(
            f"truth has (n_x, n_y) = ({truth.n_x}, {truth.n_y}), "
            f"estimate has ({estimate.n_x}, {estimate.n_y})")
    if not np.array_equal(truth.dataset.X, estimate.dataset.X):
        raise KernelDomainError("truth and estimate must share the training inputs X")


# --------------------------------------------------------------------------- #
# Exact error
# --------------------------------------------------------------------------- #

def exact_mspe(truth: GpModel, estimate: GpModel, x_star: Any) -> float:
    """
    Mean-square prediction error of the estimate's posterior mean when the data
    come from the truth's prior.

    The value depends on the training inputs and kernels only, not on the
    training outputs.

    Args:
        truth (GpModel): Model whose kernels generated the data.
        estimate (GpModel): Model used for prediction.
        x_star (Any): Test point.

    Returns:
        float: The error summed over outputs, ``>= 0``.

    Raises:
        KernelDomainError: If the models disagree on dimensions or inputs.
    """
    check_model_pair(truth, estimate)
    x = as_point(x_star, truth.n_x)
    X = truth.dataset.X
    total = 0.0
    for i, out in enumerate(truth.outputs):
        alpha = kernel_eval(out.spec, x, x)
        if truth.dataset.m:
            h = weight_vector(estimate, i, x)
            k_true = kernel_matrix(out.spec, X, x.reshape(1, -1))[:, 0]
            beta = float(h @ k_true)
            gamma = float(h @ out.gram @ h)
        else:
            beta = gamma = 0.0
        total += alpha - 2.0 * beta + gamma
    return max(total, 0.0)


def posterior_var_trace(estimate: GpModel, x_star: Any) -> float:
    return posterior(estimate, x_star).var_trace


# --------------------------------------------------------------------------- #
# General (optimization-based) bound
# --------------------------------------------------------------------------- #

def kmax(cands: CandidateSet, x: Any, x_prime: Any, *, maximizer: Maximizer | None = None) -> float:
    """
    Largest kernel value over the candidate set: the maximum over entries of
    the maximum over each entry's hyperparameter box.

    Raises:
        KernelDomainError: If an entry's family does not accept the inputs.
        BoxOptimizationError: If a box maximization does not converge.
    """
    fn = maximizer or DEFAULT_MAXIMIZER
    xa = np.asarray(x, dtype=float).reshape(-1)
    xb = np.asarray(x_prime, dtype=float).reshape(-1)
    for entry in cands:
        entry.family.input_constraint.check(np.vstack([xa, xb]))
    return max(fn(e.family, e.box, xa, xb) for e in cands)


def beta_lower(
        cands: CandidateSet,
        estimate: GpModel,
        i: int,
        x_star: Any,
        *,
        maximizer: Maximizer | None = None) -> float:
    """
    Lower bound of ``hᵀ k(x*, X)`` over the candidate set: negative weights
    pair with the largest kernel value, positive weights contribute zero.
    """
    x = as_point(x_star, estimate.n_x)
    h = weight_vector(estimate, i, x)
    X = estimate.dataset.X
    return float(sum(
        hp * kmax(cands, x, X[p], maximizer=maximizer)
        for p, hp in enumerate(h) if hp < 0.0))


def gamma_upper(
        cands: CandidateSet,
        estimate: GpModel,
        i: int,
        x_star: Any,
        *,
        maximizer: Maximizer | None = None,
        cache: PairwiseKernelCache | None = None) -> float:
    """
    Upper bound of ``hᵀ K h`` over the candidate set, using the cached matrix of
    training-pair kernel maxima plus the estimate's noise variance.
    """
    x = as_point(x_star, estimate.n_x)
    h = weight_vector(estimate, i, x)
    if h.size == 0:
        return 0.0
    X = np.ascontiguousarray(estimate.dataset.X)
    m_max = (cache or PAIRWISE_CACHE).kmax_matrix(cands, X, maximizer or DEFAULT_MAXIMIZER)
    gram = m_max + estimate.outputs[i].noise_var * np.eye(h.size)
    return float(np.sum(np.maximum(np.outer(h, h), 0.0) * gram))


def thm1_bound(
        cands: CandidateSet,
        estimate: GpModel,
        x_star: Any,
        *,
        maximizer: Maximizer | None = None,
        cache: PairwiseKernelCache | None = None) -> float:
    """
    General bound ``n_y · ᾱ + Σᵢ (γ̄ⁱ - 2 β̲ⁱ)`` with ``ᾱ = kmax(x*, x*)``.

    Args:
        cands (CandidateSet): Candidate kernels and boxes; no certificate needed.
        estimate (GpModel): The model used for prediction.
        x_star (Any): Test point.
        maximizer (Maximizer | None): Box maximizer, projected ascent by default.
        cache (PairwiseKernelCache | None): Cache for the training-pair maxima.

    Returns:
        float: An upper bound of the exact error for every truth in the set.
    """
    x = as_point(x_star, estimate.n_x)
    check_input_domain(cands, estimate.dataset.X, x)
    alpha_bar = kmax(cands, x, x, maximizer=maximizer)
    total = estimate.n_y * alpha_bar
    for i in range(estimate.n_y):
        total += gamma_upper(cands, estimate, i, x, maximizer=maximizer, cache=cache)
        total -= 2.0 * beta_lower(cands, estimate, i, x, maximizer=maximizer)
    return float(total)


# --------------------------------------------------------------------------- #
# Closed-form bound
# --------------------------------------------------------------------------- #

def closed_form_entry_value(
        h: np.ndarray,
        noise_var: float,
        kxx_up: float,
        kx_up: np.ndarray,
        kx_lo: np.ndarray,
        gram_up: np.ndarray,
        gram_lo: np.ndarray) -> float:
    """
    ``k(φ̄, x*, x*) + κ - η`` for one entry and one output from kernel values at
    the chosen corners. ``gram_*`` exclude the noise variance.
    """
    if h.size == 0:
        return float(kxx_up)
    hh = np.outer(h, h)
    noise = noise_var * np.eye(h.size)
    kappa = float(np.sum(np.maximum(hh, 0.0) * (gram_up + noise) + np.minimum(hh, 0.0) * (gram_lo + noise)))
    eta = 2.0 * float(np.sum(np.minimum(h, 0.0) * kx_up + np.maximum(h, 0.0) * kx_lo))
    return float(kxx_up) + kappa - eta


def require_certificates(cands: CandidateSet) -> None:
    if not cands.unsafe and not cands.certified:
        missing = [e.family.label for e in cands if not e.certified]
        raise AssumptionCertificateError(
            f"closed-form bound needs monotonicity certificates; missing for {', '.join(missing)}")


def thm2_bound(
        cands: CandidateSet,
        estimate: GpModel,
        x_star: Any,
        *,
        cache: PairwiseKernelCache | None = None) -> float:
    """
    Closed-form bound ``Σᵢ maxⱼ { k̃ʲ(φ̄ʲ, x*, x*) + κⁱⱼ - ηⁱⱼ }``.

    Every kernel value is taken at a box corner: the upper corner where the
    coefficient is positive, the lower corner where it is negative. No
    iterative optimization is involved.

    Args:
        cands (CandidateSet): Certified candidate set (or one marked unsafe).
        estimate (GpModel): The model used for prediction.
        x_star (Any): Test point.
        cache (PairwiseKernelCache | None): Cache for the corner Gram matrices.

    Returns:
        float: An upper bound of the exact error for every truth in the set.

    Raises:
        AssumptionCertificateError: If an entry lacks certificates and the set
            is not marked unsafe.
    """
    require_certificates(cands)
    x = as_point(x_star, estimate.n_x)
    X = np.ascontiguousarray(estimate.dataset.X)
    check_input_domain(cands, X, x)
    store = cache or PAIRWISE_CACHE
    xs = x.reshape(1, -1)
    total = 0.0
    for i in range(estimate.n_y):
        h = weight_vector(estimate, i, x)
        sigma2 = estimate.outputs[i].noise_var
        best = -np.inf
        for entry in cands:
            up, lo = entry.upper_spec, entry.lower_spec
            if X.shape[0]:
                gram_up, gram_lo = store.corner_grams(entry, X)
                kx_up = kernel_matrix(up, X, xs)[:, 0]
                kx_lo = kernel_matrix(lo, X, xs)[:, 0]
            else:
                gram_up = gram_lo = np.zeros((0, 0))
                kx_up = kx_lo = np.zeros(0)
            value = closed_form_entry_value(h, sigma2, kernel_eval(up, x, x), kx_up, kx_lo, gram_up, gram_lo)
            best = max(best, value)
        total += best
    return float(total)


# --------------------------------------------------------------------------- #
# Grid reports
# --------------------------------------------------------------------------- #

def _report_at(
        truth: GpModel | None,
        estimate: GpModel,
        cands: CandidateSet,
        x: np.ndarray,
        method: BoundMethod,
        maximizer: Maximizer | None,
        cache: PairwiseKernelCache) -> BoundReport:
    return BoundReport(
        x=x,
        est_var_trace=posterior_var_trace(estimate, x),
        exact_mspe=exact_mspe(truth, estimate, x) if truth is not None else None,
        thm1=thm1_bound(cands, estimate, x, maximizer=maximizer, cache=cache) if method.wants_thm1 else None,
        thm2=thm2_bound(cands, estimate, x, cache=cache) if method.wants_thm2 else None)


def iter_bound_reports(
        truth: GpModel | None,
        estimate: GpModel,
        cands: CandidateSet,
        X_grid: Any,
        *,
        method: BoundMethod | str = BoundMethod.BOTH,
        maximizer: Maximizer | None = None,
        threads: int = 1,
        cache: PairwiseKernelCache | None = None) -> Iterator[BoundReport]:
    """
    Yields one report per grid point, in grid order.

    The training-pair matrices are built before the points fan out over
    ``threads`` workers.

    Args:
        truth (GpModel | None): Ground truth, when known; enables ``exact_mspe``.
        estimate (GpModel): The model used for prediction.
        cands (CandidateSet): Candidate kernels and boxes.
        X_grid (Any): Test points, shape ``(n, n_x)``.
        method (BoundMethod | str): Which bounds to evaluate.
        maximizer (Maximizer | None): Box maximizer of the general bound.
        threads (int): Worker threads.
        cache (PairwiseKernelCache | None): Matrix cache, the module cache by default.

    Yields:
        BoundReport: The quantities at each grid point.
    """
    method = BoundMethod(method)
    store = cache or PAIRWISE_CACHE
    grid = np.asarray(X_grid, dtype=float)
    if grid.size == 0:
        return
    grid = grid.reshape(-1, estimate.n_x) if grid.ndim == 1 else grid
    if truth is not None:
        check_model_pair(truth, estimate)
    if method.wants_thm2:
        require_certificates(cands)

    X = np.ascontiguousarray(estimate.dataset.X)
    check_input_domain(cands, X, grid)
    if X.shape[0]:
        if method.wants_thm1:
            store.kmax_matrix(cands, X, maximizer or DEFAULT_MAXIMIZER)
        if method.wants_thm2:
            for entry in cands:
                store.corner_grams(entry, X)

    record_event(
        StageType.BOUND,
        EventType.ACTION,
        message=f"evaluating {method.value} on {grid.shape[0]} grid points",
        payload={"points": grid.shape[0], "entries": len(cands), "threads": threads})

    def task(x: np.ndarray) -> BoundReport:
        return _report_at(truth, estimate, cands, x, method, maximizer, store)

    if threads <= 1:
        for x in grid:
            yield task(x)
        return
    with ThreadPoolExecutor(max_workers=threads, thread_name_prefix="gpbound-bound") as pool:
        yield from pool.map(task, grid)


def bound_report(
        truth: GpModel | None,
        estimate: GpModel,
        cands: CandidateSet,
        X_grid: Any,
        **kwargs: Any) -> list[BoundReport]:
    """List form of ``iter_bound_reports``; an empty grid gives an empty list."""
    return list(iter_bound_reports(truth, estimate, cands, X_grid, **kwargs))
