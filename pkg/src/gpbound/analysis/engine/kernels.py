"""
Closed-form evaluation of the four supported covariance families and their
derivatives with respect to the hyperparameters.

Hyperparameter layouts:

- polynomial: ``[c]`` with ``k = (x·x′ + c²)^p``
- rational quadratic: ``[ℓ, σ]`` with ``k = σ² (1 + d²/(2pℓ²))^(-p)``
- SE-ARD: ``[ℓ_1, ..., ℓ_nx, σ]`` with ``k = σ² exp(-½ Σ (x_i - x′_i)²/ℓ_i²)``
- Matérn ``ν = p + ½``: ``[ℓ, σ]`` with the half-integer closed forms in ``r = d/ℓ``

All functions are pure and safe to call from many threads.
"""
from __future__ import annotations

from collections.abc import Sequence
from typing import Any

import numpy as np
from scipy.spatial.distance import cdist

from gpbound.analysis.domain.kernel_model import FamilyKind, KernelFamily, KernelSpec
from gpbound.helper.errors import KernelDomainError

_SQRT3 = np.sqrt(3.0)
_SQRT5 = np.sqrt(5.0)


# --------------------------------------------------------------------------- #
# Pair statistics
# --------------------------------------------------------------------------- #

def _check_inputs(family: KernelFamily, *arrays: np.ndarray) -> None:
    n_x = arrays[0].shape[-1]
    for a in arrays[1:]:
        if a.shape[-1] != n_x:
            raise KernelDomainError(f"dimension mismatch: {n_x} vs {a.shape[-1]}")
    if family.kind == FamilyKind.SE_ARD and family.n_x != n_x:
        raise KernelDomainError(f"{family.label} received {n_x}-dimensional inputs")
    constraint = family.input_constraint
    for a in arrays:
        constraint.check(a)


def _matrix_stats(family: KernelFamily, XA: np.ndarray, XB: np.ndarray) -> np.ndarray:
    match family.kind:
        case FamilyKind.POLY:
            return XA @ XB.T
        case FamilyKind.SE_ARD:
            return (XA.T[:, :, None] - XB.T[:, None, :]) ** 2
        case _:
            return cdist(XA, XB, metric="sqeuclidean")


def _paired_stats(family: KernelFamily, XA: np.ndarray, XB: np.ndarray) -> np.ndarray:
    match family.kind:
        case FamilyKind.POLY:
            return np.einsum("ij,ij->i", XA, XB)
        case FamilyKind.SE_ARD:
            return ((XA - XB) ** 2).T
        case _:
            return np.sum((XA - XB) ** 2, axis=1)


# --------------------------------------------------------------------------- #
# Family formulas
# --------------------------------------------------------------------------- #

def _evaluate(
        family: KernelFamily,
        phi: Sequence[Any],
        stats: np.ndarray,
        want_grad: bool) -> tuple[np.ndarray, list[np.ndarray] | None]:
    """
    Evaluates a family on precomputed pair statistics.

    ``phi`` holds one entry per hyperparameter, each a scalar or an array
    broadcastable against the statistics (one φ per pair).
    """
    p = family.p
    with np.errstate(over="ignore", under="ignore", divide="ignore", invalid="ignore"):
        match family.kind:
            case FamilyKind.POLY:
                c = phi[0]
                base = stats + c * c
                k = base ** p
                grads = [p * base ** (p - 1) * 2.0 * c] if want_grad else None

            case FamilyKind.RQ:
                ell, sigma = phi[0], phi[1]
                b = 1.0 + stats / (2.0 * p * ell * ell)
                shape = b ** (-p)
                k = sigma * sigma * shape
                grads = None
                if want_grad:
                    d_ell = sigma * sigma * b ** (-p - 1) * stats / ell ** 3
                    grads = [d_ell, 2.0 * sigma * shape]

            case FamilyKind.SE_ARD:
                n_x = int(family.n_x)  # type: ignore[arg-type]
                sigma = phi[n_x]
                q = sum(stats[i] / (phi[i] * phi[i]) for i in range(n_x))
                shape = np.exp(-0.5 * q)
                k = sigma * sigma * shape
                grads = None
                if want_grad:
                    grads = [k * stats[i] / phi[i] ** 3 for i in range(n_x)]
                    grads.append(2.0 * sigma * shape)

            case FamilyKind.MATERN:
                ell, sigma = phi[0], phi[1]
                r = np.sqrt(stats) / ell
                zero = stats == 0.0
                if p == 0:
                    e = np.exp(-r)
                    shape = e
                    d_shape = e * r / ell
                elif p == 1:
                    a = _SQRT3 * r
                    e = np.exp(-a)
                    shape = (1.0 + a) * e
                    d_shape = 3.0 * r * r * e / ell
                else:
                    a = _SQRT5 * r
                    e = np.exp(-a)
                    shape = (1.0 + a + a * a / 3.0) * e
                    d_shape = (5.0 / 3.0) * r * r * (1.0 + a) * e / ell
                # removable singularity at d = 0
                shape = np.where(zero, 1.0, shape)
                k = sigma * sigma * shape
                grads = None
                if want_grad:
                    d_shape = np.where(zero, 0.0, d_shape)
                    grads = [sigma * sigma * d_shape, 2.0 * sigma * shape]

            case _:  # pragma: no cover
                raise KernelDomainError(f"unsupported family {family.kind!r}")

    k = np.nan_to_num(np.asarray(k, dtype=float), nan=0.0, posinf=np.inf)
    if grads is not None:
        grads = [np.nan_to_num(np.asarray(g, dtype=float), nan=0.0) for g in grads]
    return k, grads


# --------------------------------------------------------------------------- #
# Public API
# --------------------------------------------------------------------------- #

def kernel_eval(spec: KernelSpec, x: Any, x_prime: Any) -> float:
    """
    Evaluates ``k(φ, x, x′)`` for a single pair of points.

    Args:
        spec (KernelSpec): Family and hyperparameters.
        x (Any): First point, length ``n_x``.
        x_prime (Any): Second point, length ``n_x``.

    Returns:
        float: The covariance, finite and nonnegative.

    Raises:
        KernelDomainError: On dimension mismatch or a polynomial input with a
            negative coordinate.
    """
    xa = np.asarray(x, dtype=float).reshape(1, -1)
    xb = np.asarray(x_prime, dtype=float).reshape(1, -1)
    _check_inputs(spec.family, xa, xb)
    k, _ = _evaluate(spec.family, list(spec.phi), _paired_stats(spec.family, xa, xb), False)
    return float(k[0])


def kernel_matrix(spec: KernelSpec, XA: Any, XB: Any | None = None) -> np.ndarray:
    """
    Cross-covariance matrix ``K[a, b] = k(φ, XA[a], XB[b])``.

    Args:
        spec (KernelSpec): Family and hyperparameters.
        XA (Any): Inputs, shape ``(na, n_x)``.
        XB (Any | None): Inputs, shape ``(nb, n_x)``; defaults to ``XA``.

    Returns:
        np.ndarray: Matrix of shape ``(na, nb)``. Exactly symmetric when ``XB`` is omitted.
    """
    xa = np.atleast_2d(np.asarray(XA, dtype=float))
    xb = xa if XB is None else np.atleast_2d(np.asarray(XB, dtype=float))
    _check_inputs(spec.family, xa, xb)
    k, _ = _evaluate(spec.family, list(spec.phi), _matrix_stats(spec.family, xa, xb), False)
    if XB is None:
        k = 0.5 * (k + k.T)
    return k


def kernel_matrix_grad(spec: KernelSpec, X: Any) -> tuple[np.ndarray, np.ndarray]:
    """
    Gram matrix (without noise) and its derivatives with respect to each hyperparameter.

    Args:
        spec (KernelSpec): Family and hyperparameters.
        X (Any): Inputs, shape ``(m, n_x)``.

    Returns:
        tuple[np.ndarray, np.ndarray]: ``K`` of shape ``(m, m)`` and ``dK/dφ``
        of shape ``(l, m, m)``.
    """
    x = np.atleast_2d(np.asarray(X, dtype=float))
    _check_inputs(spec.family, x)
    k, grads = _evaluate(spec.family, list(spec.phi), _matrix_stats(spec.family, x, x), True)
    assert grads is not None
    return k, np.stack([np.broadcast_to(g, k.shape) for g in grads])


def kernel_diag(spec: KernelSpec, X: Any) -> np.ndarray:
    """Prior variances ``k(φ, x, x)`` for every row of ``X``."""
    x = np.atleast_2d(np.asarray(X, dtype=float))
    _check_inputs(spec.family, x)
    k, _ = _evaluate(spec.family, list(spec.phi), _paired_stats(spec.family, x, x), False)
    return np.broadcast_to(k, (x.shape[0],)).copy()


def kernel_values_paired(
        family: KernelFamily,
        phis: Any,
        XA: Any,
        XB: Any) -> np.ndarray:
    """
    Evaluates row ``n`` as ``k(phis[n], XA[n], XB[n])``.

    Inputs broadcast along the first axis, so a single pair may be combined with
    many hyperparameter vectors and vice versa.

    Args:
        family (KernelFamily): The family.
        phis (Any): Hyperparameters, shape ``(n, l)`` or ``(l,)``.
        XA (Any): First points, shape ``(n, n_x)`` or ``(1, n_x)``.
        XB (Any): Second points, same shape rules as ``XA``.

    Returns:
        np.ndarray: Values of shape ``(n,)``.
    """
    ph = np.atleast_2d(np.asarray(phis, dtype=float))
    if ph.shape[1] != family.n_hyper:
        raise KernelDomainError(f"{family.label} expects {family.n_hyper} hyperparameters")
    xa = np.atleast_2d(np.asarray(XA, dtype=float))
    xb = np.atleast_2d(np.asarray(XB, dtype=float))
    _check_inputs(family, xa, xb)
    cols = [ph[:, j] for j in range(ph.shape[1])]
    k, _ = _evaluate(family, cols, _paired_stats(family, xa, xb), False)
    n = max(ph.shape[0], xa.shape[0], xb.shape[0])
    return np.broadcast_to(k, (n,)).copy()


def kernel_value_and_phi_grad(
        family: KernelFamily,
        phi: Any,
        x: Any,
        x_prime: Any) -> tuple[float, np.ndarray]:
    """
    Kernel value at one pair and its gradient with respect to φ.

    Returns:
        tuple[float, np.ndarray]: ``k`` and ``∂k/∂φ`` of shape ``(l,)``.
    """
    ph = np.asarray(phi, dtype=float).reshape(-1)
    xa = np.asarray(x, dtype=float).reshape(1, -1)
    xb = np.asarray(x_prime, dtype=float).reshape(1, -1)
    k, grads = _evaluate(family, list(ph), _paired_stats(family, xa, xb), True)
    assert grads is not None
    return float(np.asarray(k).reshape(-1)[0]), np.array([float(np.asarray(g).reshape(-1)[0]) for g in grads])
