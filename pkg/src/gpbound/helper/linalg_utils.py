from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from gpbound.analysis.constants import JITTER_GROWTH, JITTER_MAX, JITTER_START
from gpbound.helper.errors import IllConditionedGramError


@dataclass(frozen=True, slots=True)
class CholeskyFactor:
    """
    Lower Cholesky factor of a symmetric positive definite matrix, together
    with the diagonal jitter that had to be added to obtain it.

    Attributes:
        lower (np.ndarray): The lower-triangular factor L with A + jI = L Lᵀ.
        jitter (float): Absolute jitter j added to the diagonal (0 if none).
    """
    lower: np.ndarray
    jitter: float

    @property
    def size(self) -> int:
        return int(self.lower.shape[0])

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return cho_solve((self.lower, True), rhs, check_finite=False)

    def log_det(self) -> float:
        return float(2.0 * np.sum(np.log(np.diag(self.lower))))


def jittered_cholesky(matrix: np.ndarray, *, force_jitter: bool = False) -> CholeskyFactor:
    """
    Factorizes a symmetric matrix, escalating a diagonal jitter on failure.

    The first attempt uses no jitter unless ``force_jitter`` is set (noise-free
    Gram matrices). Jitter starts at ``1e-10`` times the mean diagonal and grows
    tenfold up to ``1e-4`` times the mean diagonal.

    Args:
        matrix (np.ndarray): Symmetric square matrix.
        force_jitter (bool): Skip the jitter-free attempt.

    Returns:
        CholeskyFactor: The factor and the jitter used.

    Raises:
        IllConditionedGramError: If even the largest jitter fails.
    """
    a = np.asarray(matrix, dtype=float)
    n = a.shape[0]
    if n == 0:
        return CholeskyFactor(lower=np.zeros((0, 0)), jitter=0.0)
    if not np.all(np.isfinite(a)):
        raise IllConditionedGramError("matrix has non-finite entries", size=n)

    scale = float(np.mean(np.diag(a)))
    if not np.isfinite(scale) or scale <= 0.0:
        scale = 1.0

    schedule: list[float] = [] if force_jitter else [0.0]
    rel = JITTER_START
    while rel <= JITTER_MAX * (1.0 + 1e-9):
        schedule.append(rel * scale)
        rel *= JITTER_GROWTH

    for jitter in schedule:
        try:
            c, _ = cho_factor(a + jitter * np.eye(n), lower=True, check_finite=False)
        except np.linalg.LinAlgError:
            continue
        lower = np.tril(c)
        if np.all(np.diag(lower) > 0.0) and np.all(np.isfinite(lower)):
            return CholeskyFactor(lower=lower, jitter=jitter)

    raise IllConditionedGramError(
        f"{n}x{n} matrix is not positive definite after jitter {schedule[-1]:.3g}",
        size=n,
        last_jitter=schedule[-1])
