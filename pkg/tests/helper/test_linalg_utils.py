import numpy as np
import pytest

from gpbound.analysis.constants import JITTER_GROWTH, JITTER_MAX, JITTER_START
from gpbound.helper.errors import IllConditionedGramError
from gpbound.helper.linalg_utils import jittered_cholesky


class TestJitteredCholesky:
    def test_positive_definite_needs_no_jitter(self):
        a = np.array([[4.0, 1.0], [1.0, 3.0]])
        factor = jittered_cholesky(a)
        assert factor.jitter == 0.0
        np.testing.assert_allclose(factor.lower @ factor.lower.T, a, atol=1e-12)

    def test_forced_jitter_starts_at_relative_floor(self):
        a = np.array([[2.0, 0.0], [0.0, 2.0]])
        factor = jittered_cholesky(a, force_jitter=True)
        assert factor.jitter == pytest.approx(JITTER_START * 2.0)

    def test_singular_matrix_gets_jitter(self):
        a = np.ones((2, 2))
        factor = jittered_cholesky(a)
        assert 0.0 < factor.jitter <= JITTER_MAX * (1.0 + 1e-9)
        assert np.all(np.diag(factor.lower) > 0.0)

    def test_negative_definite_raises_with_last_jitter(self):
        with pytest.raises(IllConditionedGramError) as info:
            jittered_cholesky(-np.eye(2))
        assert info.value.size == 2
        assert info.value.last_jitter == pytest.approx(JITTER_MAX, rel=1e-6)

    def test_non_finite_entries_raise(self):
        with pytest.raises(IllConditionedGramError):
            jittered_cholesky(np.array([[1.0, np.nan], [np.nan, 1.0]]))

    def test_empty_matrix(self):
        factor = jittered_cholesky(np.zeros((0, 0)))
        assert factor.size == 0
        assert factor.jitter == 0.0

    def test_solve_and_log_det_match_numpy(self):
        rng = np.random.default_rng(7)
        b = rng.standard_normal((4, 4))
        a = b @ b.T + 4.0 * np.eye(4)
        rhs = rng.standard_normal(4)
        factor = jittered_cholesky(a)
        np.testing.assert_allclose(factor.solve(rhs), np.linalg.solve(a, rhs), rtol=1e-10)
        assert factor.log_det() == pytest.approx(np.linalg.slogdet(a)[1], rel=1e-12)

    def test_jitter_follows_the_configured_schedule(self):
        factor = jittered_cholesky(np.ones((3, 3)))
        steps = np.log(factor.jitter / JITTER_START) / np.log(JITTER_GROWTH)
        assert steps == pytest.approx(round(steps), abs=1e-9)
