"""
Exact zero-mean GP regression with one independent GP per output dimension.
"""
from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy.linalg import solve_triangular

from gpbound.analysis.constants import VARIANCE_CLAMP_TOL
from gpbound.analysis.domain.dataset_model import Dataset
from gpbound.analysis.domain.kernel_model import KernelSpec
from gpbound.analysis.engine.kernels import kernel_diag, kernel_matrix
from gpbound.analysis.lifecycle.audit.run_event_model import EventType, LevelType, StageType, record_event
from gpbound.helper.errors import KernelDomainError
from gpbound.helper.linalg_utils import CholeskyFactor, jittered_cholesky


def gram(spec: KernelSpec, X: Any, noise_var: float) -> np.ndarray:
    """
    Gram matrix ``K[j', j] = k(φ, X[j'], X[j]) + δ(j, j') σ²``.

    No jitter is added here; ``factorize_gram`` applies the jitter policy.

    Args:
        spec (KernelSpec): Kernel and hyperparameters.
        X (Any): Inputs, shape ``(m, n_x)``.
        noise_var (float): Noise variance σ² added to the diagonal.

    Returns:
        np.ndarray: Symmetric ``(m, m)`` matrix.
    """
    x = np.asarray(X, dtype=float)
    k = kernel_matrix(spec, x)
    k[np.diag_indices_from(k)] += float(noise_var)
    return k


def factorize_gram(matrix: np.ndarray, noise_var: float) -> CholeskyFactor:
    """Cholesky of a Gram matrix; noise-free matrices always receive the starting jitter."""
    factor = jittered_cholesky(matrix, force_jitter=float(noise_var) == 0.0)
    if factor.jitter > 0.0 and noise_var > 0.0:
        record_event(
            StageType.LIFECYCLE,
            EventType.DECISION,
            LevelType.WARN,
            message="Gram matrix needed jitter despite positive noise",
            payload={"size": factor.size, "jitter": factor.jitter})
    return factor


@dataclass(frozen=True, slots=True, eq=False)
class OutputModel:
    """
    Cached state for one output dimension.

    Attributes:
        spec (KernelSpec): Kernel of this output.
        noise_var (float): σᵢ².
        gram (np.ndarray): ``Kⁱ`` including σᵢ² (no jitter).
        factor (CholeskyFactor): Factorization of ``Kⁱ`` (plus jitter, if any).
        alpha (np.ndarray): Weights ``Kⁱ⁻¹ Y[:, i]``.
    """
    spec: KernelSpec
    noise_var: float
    gram: np.ndarray
    factor: CholeskyFactor
    alpha: np.ndarray

    def cross(self, X: np.ndarray, x_star: np.ndarray) -> np.ndarray:
        return kernel_matrix(self.spec, X, x_star)

    def weights(self, k_star: np.ndarray) -> np.ndarray:
        """``K⁻¹ k*`` for cross-covariance columns ``k*``."""
        return self.factor.solve(k_star)


@dataclass(frozen=True, slots=True, eq=False)
class Posterior:
    """
    Predictive mean and variance at one test point, one entry per output.
    """
    mean: np.ndarray
    var: np.ndarray

    @property
    def var_trace(self) -> float:
        return float(np.sum(self.var))


@dataclass(frozen=True, slots=True, eq=False)
class GpModel:
    """
    Independent per-output GP models conditioned on a shared dataset.

    Built once by ``GpModel.build``; immutable afterwards, so concurrent
    read-only prediction is safe. Refitting produces a new model.

    Attributes:
        kernels (tuple[KernelSpec, ...]): One kernel per output.
        dataset (Dataset): The training data.
        outputs (tuple[OutputModel, ...]): Cached factorizations and weights.
    """
    kernels: tuple[KernelSpec, ...]
    dataset: Dataset
    outputs: tuple[OutputModel, ...]

    @classmethod
    def build(cls, kernels: KernelSpec | Sequence[KernelSpec], dataset: Dataset) -> GpModel:
        """
        Assembles and factorizes the Gram matrix of every output.

        Args:
            kernels (KernelSpec | Sequence[KernelSpec]): One kernel per output,
                or a single kernel shared by all outputs.
            dataset (Dataset): Training data.

        Returns:
            GpModel: The conditioned model.

        Raises:
            KernelDomainError: If the kernel count does not match ``n_y``.
            IllConditionedGramError: If a Gram matrix cannot be factorized.
        """
        specs = (kernels,) * dataset.n_y if isinstance(kernels, KernelSpec) else tuple(kernels)
        if len(specs) != dataset.n_y:
            raise KernelDomainError(f"{len(specs)} kernels for {dataset.n_y} outputs")
        outputs = []
        for i, spec in enumerate(specs):
            sigma2 = float(dataset.noise_var[i])
            k = gram(spec, dataset.X, sigma2) if dataset.m else np.zeros((0, 0))
            factor = factorize_gram(k, sigma2)
            alpha = factor.solve(dataset.Y[:, i]) if dataset.m else np.zeros(0)
            outputs.append(OutputModel(spec=spec, noise_var=sigma2, gram=k, factor=factor, alpha=alpha))
        return cls(kernels=specs, dataset=dataset, outputs=tuple(outputs))

    @property
    def n_y(self) -> int:
        return self.dataset.n_y

    @property
    def n_x(self) -> int:
        return self.dataset.n_x

    def with_dataset(self, dataset: Dataset) -> GpModel:
        return GpModel.build(self.kernels, dataset)

    def with_kernels(self, kernels: KernelSpec | Sequence[KernelSpec]) -> GpModel:
        return GpModel.build(kernels, self.dataset)

    def weight_vector(self, i: int, x_star: Any) -> np.ndarray:
        """``hⁱ = Kⁱ⁻¹ kⁱ(x*, X)`` for one test point, shape ``(m,)``."""
        out = self.outputs[i]
        if self.dataset.m == 0:
            return np.zeros(0)
        k_star = out.cross(self.dataset.X, _point(x_star, self.n_x))[:, 0]
        return out.weights(k_star)


def _point(x_star: Any, n_x: int) -> np.ndarray:
    x = np.asarray(x_star, dtype=float).reshape(-1)
    if x.shape[0] != n_x:
        raise KernelDomainError(f"test point has dimension {x.shape[0]}, model expects {n_x}")
    return x.reshape(1, n_x)


def _points(X_star: Any, n_x: int) -> np.ndarray:
    x = np.asarray(X_star, dtype=float)
    if x.ndim == 1:
        x = x.reshape(-1, n_x) if n_x == 1 else x.reshape(1, -1)
    if x.shape[1] != n_x:
        raise KernelDomainError(f"test points have dimension {x.shape[1]}, model expects {n_x}")
    return x


def _clamp_variance(var: np.ndarray) -> np.ndarray:
    worst = float(np.min(var)) if var.size else 0.0
    if worst < -VARIANCE_CLAMP_TOL:
        record_event(
            StageType.LIFECYCLE,
            EventType.DECISION,
            LevelType.WARN,
            message="posterior variance below tolerance clamped to zero",
            payload={"min_variance": worst})
    return np.maximum(var, 0.0)


def predict(model: GpModel, X_star: Any) -> tuple[np.ndarray, np.ndarray]:
    """
    Posterior mean and variance for many test points.

    Args:
        model (GpModel): The conditioned model.
        X_star (Any): Test inputs, shape ``(n, n_x)`` (a flat array is read as
            ``n`` one-dimensional points when ``n_x = 1``).

    Returns:
        tuple[np.ndarray, np.ndarray]: Means and variances, each ``(n, n_y)``.
    """
    xs = _points(X_star, model.n_x)
    n = xs.shape[0]
    means = np.zeros((n, model.n_y))
    variances = np.zeros((n, model.n_y))
    for i, out in enumerate(model.outputs):
        prior = kernel_diag(out.spec, xs)
        if model.dataset.m == 0:
            variances[:, i] = prior
            continue
        k_star = out.cross(model.dataset.X, xs)
        means[:, i] = k_star.T @ out.alpha
        w = solve_triangular(out.factor.lower, k_star, lower=True, check_finite=False)
        variances[:, i] = prior - np.sum(w * w, axis=0)
    return means, _clamp_variance(variances)


def posterior(model: GpModel, x_star: Any) -> Posterior:
    mean, var = predict(model, _point(x_star, model.n_x))
    return Posterior(mean=mean[0], var=var[0])


def posterior_mean(model: GpModel, x_star: Any) -> np.ndarray:
    """Mean ``kⁱ(x*, X)ᵀ Kⁱ⁻¹ Y[:, i]`` for every output, shape ``(n_y,)``."""
    return posterior(model, x_star).mean


def posterior_var(model: GpModel, x_star: Any) -> np.ndarray:
    """Variance ``kⁱ(x*, x*) - kⁱ(x*, X)ᵀ Kⁱ⁻¹ kⁱ(x*, X)`` for every output, clamped at zero."""
    return posterior(model, x_star).var


def sample_prior(
        spec: KernelSpec,
        X: Any,
        noise_var: float,
        rng: np.random.Generator,
        size: int = 1) -> np.ndarray:
    """
    Draws noisy observations ``f(X) + ε`` from the zero-mean GP prior.

    Args:
        spec (KernelSpec): Prior kernel.
        X (Any): Inputs, shape ``(m, n_x)``.
        noise_var (float): Variance of the additive Gaussian noise.
        rng (np.random.Generator): Random source.
        size (int): Number of independent draws.

    Returns:
        np.ndarray: Draws of shape ``(size, m)``.
    """
    k = gram(spec, X, 0.0)
    factor = jittered_cholesky(k, force_jitter=True)
    z = rng.standard_normal((size, k.shape[0]))
    f = z @ factor.lower.T
    if noise_var > 0.0:
        f = f + np.sqrt(noise_var) * rng.standard_normal(f.shape)
    return f
