import numpy as np
import pytest

from gpbound.analysis.constants import DEFAULT_CHECK_BUDGET
from gpbound.analysis.domain.candidate_model import CandidateEntry, CandidateSet, HyperRectangle
from gpbound.analysis.domain.kernel_model import KernelFamily
from gpbound.analysis.domain.report_model import PropertyKind
from gpbound.analysis.engine.kernel_checks import (
    CheckConfig,
    certify_candidate_set,
    check_componentwise_monotone,
    check_line_quasiconcave,
)
from gpbound.helper.errors import AssumptionCertificateError

CONFIG = CheckConfig(budget=DEFAULT_CHECK_BUDGET, seed=5)

# reference boxes, then the boxes of the state-space experiment
CERTIFIED_BOXES = [
    (KernelFamily.se_ard(1), HyperRectangle(lower=np.array([0.5, 0.5]), upper=np.array([3.0, 3.0]))),
    (KernelFamily.matern(1), HyperRectangle(lower=np.array([1.0, 1.0]), upper=np.array([5.0, 5.0]))),
    (KernelFamily.matern(1), HyperRectangle(lower=np.array([4.68, 1.44]), upper=np.array([5.72, 1.76]))),
    (KernelFamily.matern(1), HyperRectangle(lower=np.array([1e-8, 1e-8]), upper=np.array([15.6, 4.8]))),
    (KernelFamily.matern(0), HyperRectangle(lower=np.array([1.0, 1.5]), upper=np.array([10.0, 2.0]))),
    (KernelFamily.matern(2), HyperRectangle(lower=np.array([1.0, 1.5]), upper=np.array([10.0, 2.0]))),
    (KernelFamily.rq(1), HyperRectangle(lower=np.array([1.0, 0.1]), upper=np.array([20.0, 1.0]))),
    (KernelFamily.se_ard(1), HyperRectangle(lower=np.array([0.1, 0.01]), upper=np.array([10.0, 1.0]))),
    (KernelFamily.poly(2), HyperRectangle(lower=np.array([0.0]), upper=np.array([3.0]))),
]

UNIT_BOX = HyperRectangle(lower=np.array([0.5, 0.5]), upper=np.array([1.5, 1.5]))


def _decreasing(family, phis, xa, xb):
    return -np.atleast_2d(phis)[:, 0]


def _valley(family, phis, xa, xb):
    return (np.atleast_2d(phis)[:, 0] - 1.0) ** 2


@pytest.mark.parametrize(("family", "box"), CERTIFIED_BOXES, ids=lambda v: getattr(v, "label", ""))
def test_supported_families_pass(family, box):
    mono = check_componentwise_monotone(family, box, config=CONFIG)
    qc = check_line_quasiconcave(family, box, config=CONFIG)
    assert mono.passed, mono.witness
    assert qc.passed, qc.witness
    assert mono.n_checked == qc.n_checked == CONFIG.budget


class TestInjectedFailures:
    def test_decreasing_function_fails_monotonicity(self):
        report = check_componentwise_monotone(KernelFamily.rq(1), UNIT_BOX, config=CONFIG, kernel_fn=_decreasing)
        assert not report.passed
        assert report.check == PropertyKind.COMPONENTWISE_MONOTONE
        assert report.witness["coordinate"] == 0.0
        assert report.witness["k_bumped"] < report.witness["k"]

    def test_valley_fails_quasiconcavity(self):
        report = check_line_quasiconcave(KernelFamily.rq(1), UNIT_BOX, config=CONFIG, kernel_fn=_valley)
        assert not report.passed
        values = np.array(report.witness["values"])
        assert values[1:-1].min() < min(values[0], values[-1])

    def test_decreasing_function_is_quasiconcave(self):
        report = check_line_quasiconcave(KernelFamily.rq(1), UNIT_BOX, config=CONFIG, kernel_fn=_decreasing)
        assert report.passed


def test_same_seed_same_report():
    family = KernelFamily.rq(1)
    a = check_componentwise_monotone(family, UNIT_BOX, config=CONFIG, kernel_fn=_valley)
    b = check_componentwise_monotone(family, UNIT_BOX, config=CONFIG, kernel_fn=_valley)
    assert a.to_mapping() == b.to_mapping()


class TestCertify:
    def test_attaches_reports(self, run_plan):
        family, box = CERTIFIED_BOXES[0]
        cands = CandidateSet(entries=(CandidateEntry(family=family, box=box),))
        checked = certify_candidate_set(cands, config=CONFIG)
        assert checked.certified
        assert not cands.certified
        assert len(run_plan.audit_log) == 1

    def test_failure_raises_unless_unsafe(self, monkeypatch):
        from gpbound.analysis.engine import kernel_checks

        monkeypatch.setattr(kernel_checks, "kernel_values_paired", _decreasing)
        cands = CandidateSet(entries=(CandidateEntry(family=KernelFamily.rq(1), box=UNIT_BOX),))
        with pytest.raises(AssumptionCertificateError, match="--unsafe"):
            certify_candidate_set(cands, config=CONFIG)
        checked = certify_candidate_set(cands.with_unsafe(), config=CONFIG)
        assert not checked.certified
        assert checked.unsafe


@pytest.mark.parametrize("kwargs", [{"budget": 0}, {"grid": 2}])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        CheckConfig(**kwargs)
