"""
Independent validators for the bound engine: Monte Carlo estimation of the
prediction error by joint-prior sampling, grid-search box maxima, and a
corner-enumeration evaluation of the closed-form bound.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Any

import numpy as np

from gpbound.analysis.constants import DEFAULT_GRID_RESOLUTION, GRID_MAX_DIM
from gpbound.analysis.domain.candidate_model import CandidateEntry, CandidateSet, HyperRectangle
from gpbound.analysis.domain.kernel_model import KernelFamily
from gpbound.analysis.domain.oracle_model import McConfig, McResult
from gpbound.analysis.engine.bound_engine import (
    as_point,
    check_input_domain,
    check_model_pair,
    closed_form_entry_value,
    require_certificates,
    weight_vector,
)
from gpbound.analysis.engine.box_optimizer import Maximizer
from gpbound.analysis.engine.gp_model import GpModel
from gpbound.analysis.engine.kernels import kernel_eval, kernel_matrix, kernel_values_paired
from gpbound.analysis.lifecycle.audit.run_event_model import EventType, StageType, record_event
from gpbound.helper.linalg_utils import jittered_cholesky

_GRID_CHUNK = 1_000_000


# --------------------------------------------------------------------------- #
# Monte Carlo
# --------------------------------------------------------------------------- #

def _joint_factors(truth: GpModel, x: np.ndarray) -> list[np.ndarray]:
    """Lower Cholesky factors of the ``(m+1)`` joint prior covariance of ``(Y, y*)`` per output."""
    X = truth.dataset.X
    joint = np.vstack([X, x.reshape(1, -1)])
    m = X.shape[0]
    factors = []
    for out in truth.outputs:
        cov = kernel_matrix(out.spec, joint)
        cov[np.arange(m), np.arange(m)] += out.noise_var
        factors.append(jittered_cholesky(cov).lower)
    return factors


def _batch_moments(
        seed: int,
        index: int,
        size: int,
        factors: list[np.ndarray],
        weights: list[np.ndarray]) -> tuple[int, float, float]:
    """Count, mean and centred sum of squares of the squared error over one batch."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, index])))
    sq = np.zeros(size)
    for lower, h in zip(factors, weights):
        draws = rng.standard_normal((size, lower.shape[0])) @ lower.T
        err = draws[:, -1] - draws[:, :-1] @ h
        sq += err * err
    mean = float(np.mean(sq))
    return size, mean, float(np.sum((sq - mean) ** 2))


def mc_mspe(
        truth: GpModel,
        estimate: GpModel,
        x_star: Any,
        config: McConfig | None = None,
        *,
        threads: int = 1) -> McResult:
    """
    Monte Carlo estimate of the prediction error at ``x_star``.

    Each draw samples training outputs and the noise-free test value jointly
    from the truth's prior (noise on the training block only), predicts with
    the estimate's weights ``h`` and records ``‖y* - hᵀY‖²``. Batches use
    counter-based streams keyed by ``(seed, batch)`` and are reduced in batch
    order, so the result does not depend on ``threads``.

    Args:
        truth (GpModel): Data-generating model.
        estimate (GpModel): Model whose mean is evaluated.
        x_star (Any): Test point.
        config (McConfig | None): Sample count, seed and batch size.
        threads (int): Worker threads.

    Returns:
        McResult: Sample mean and its standard error.
    """
    cfg = config or McConfig()
    check_model_pair(truth, estimate)
    x = as_point(x_star, truth.n_x)
    factors = _joint_factors(truth, x)
    weights = [weight_vector(estimate, i, x) for i in range(estimate.n_y)]
    sizes = cfg.batch_sizes

    def run(item: tuple[int, int]) -> tuple[int, float, float]:
        index, size = item
        return _batch_moments(cfg.seed, index, size, factors, weights)

    items = list(enumerate(sizes))
    if threads <= 1:
        moments = [run(item) for item in items]
    else:
        with ThreadPoolExecutor(max_workers=threads, thread_name_prefix="gpbound-mc") as pool:
            moments = list(pool.map(run, items))

    # pairwise merge of batch moments in batch order
    count, mean, m2 = 0, 0.0, 0.0
    for n_b, mean_b, m2_b in moments:
        total = count + n_b
        delta = mean_b - mean
        mean += delta * n_b / total
        m2 += m2_b + delta * delta * count * n_b / total
        count = total
    variance = m2 / (count - 1)
    result = McResult(
        estimate=mean,
        std_error=float(np.sqrt(variance / count)),
        n_samples=count,
        seed=cfg.seed)
    record_event(
        StageType.ORACLE,
        EventType.CHECKPOINT,
        message="monte carlo estimate complete",
        payload=result.to_mapping())
    return result


# --------------------------------------------------------------------------- #
# Grid search
# --------------------------------------------------------------------------- #

def grid_max(
        family: KernelFamily,
        box: HyperRectangle,
        x: Any,
        x_prime: Any,
        resolution: int = DEFAULT_GRID_RESOLUTION) -> float:
    """
    Largest kernel value on a regular grid over the box, ``resolution`` points
    per non-degenerate axis.

    Raises:
        ValueError: If the box has more than four dimensions or the resolution
            is below 2.
    """
    box.validate_for(family)
    if box.dim > GRID_MAX_DIM:
        raise ValueError(f"grid search supports at most {GRID_MAX_DIM} hyperparameters, got {box.dim}")
    if resolution < 2:
        raise ValueError(f"resolution must be >= 2, got {resolution}")
    axes = [
        np.linspace(lo, hi, resolution) if hi > lo else np.array([lo])
        for lo, hi in zip(box.lower, box.upper)
    ]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, box.dim)
    best = -np.inf
    for start in range(0, mesh.shape[0], _GRID_CHUNK):
        chunk = mesh[start:start + _GRID_CHUNK]
        best = max(best, float(np.max(kernel_values_paired(family, chunk, x, x_prime))))
    return best


def grid_maximizer(resolution: int = DEFAULT_GRID_RESOLUTION) -> Maximizer:
    def maximizer(family: KernelFamily, box: HyperRectangle, x: np.ndarray, x_prime: np.ndarray) -> float:
        return grid_max(family, box, x, x_prime, resolution)

    return maximizer


# --------------------------------------------------------------------------- #
# Corner enumeration
# --------------------------------------------------------------------------- #

def _corner_entry_value(
        entry: CandidateEntry,
        h: np.ndarray,
        noise_var: float,
        X: np.ndarray,
        x: np.ndarray) -> float:
    specs = [entry.spec_at(c) for c in entry.box.corners()]
    xs = x.reshape(1, -1)
    kxx = np.array([kernel_eval(s, x, x) for s in specs])
    if X.shape[0]:
        kx = np.stack([kernel_matrix(s, X, xs)[:, 0] for s in specs])
        grams = np.stack([kernel_matrix(s, X) for s in specs])
        return closed_form_entry_value(
            h, noise_var, float(kxx.max()),
            kx.max(axis=0), kx.min(axis=0),
            grams.max(axis=0), grams.min(axis=0))
    empty = np.zeros(0)
    return closed_form_entry_value(h, noise_var, float(kxx.max()), empty, empty, np.zeros((0, 0)), np.zeros((0, 0)))


def corner_enum_bound(cands: CandidateSet, estimate: GpModel, x_star: Any) -> float:
    """
    The closed-form bound with every kernel value chosen by exhaustive search
    over all ``2^l`` box corners: the largest corner value where the
    coefficient is positive, the smallest where it is negative.

    For componentwise monotone families this picks the upper and lower corners
    and reproduces ``thm2_bound`` exactly.
    """
    require_certificates(cands)
    x = as_point(x_star, estimate.n_x)
    X = estimate.dataset.X
    check_input_domain(cands, X, x)
    total = 0.0
    for i in range(estimate.n_y):
        h = weight_vector(estimate, i, x)
        sigma2 = estimate.outputs[i].noise_var
        total += max(_corner_entry_value(entry, h, sigma2, X, x) for entry in cands)
    return float(total)
