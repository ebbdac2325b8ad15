import json

import numpy as np
import pytest

from gpbound.analysis.domain.candidate_model import (
    CandidateEntry,
    CandidateSet,
    CertificationReport,
    HyperRectangle,
)
from gpbound.analysis.domain.kernel_model import KernelFamily, KernelSpec
from gpbound.analysis.domain.report_model import PropertyCheckReport, PropertyKind
from gpbound.helper.errors import KernelDomainError

CANDS_JSON = [
    {"family": "matern", "p": 1, "lower": [4.68, 1.44], "upper": [5.72, 1.76]},
    {"family": "se_ard", "lower": [0.1, 0.01], "upper": [10.0, 1.0]},
]


def _report(kind: PropertyKind, passed: bool) -> PropertyCheckReport:
    return PropertyCheckReport(check=kind, family="matern(p=1)", passed=passed, n_checked=10)


class TestHyperRectangle:
    def test_corners_lower_first_upper_last(self):
        box = HyperRectangle(lower=np.array([1.0, 2.0]), upper=np.array([3.0, 4.0]))
        corners = box.corners()
        assert corners.shape == (4, 2)
        np.testing.assert_array_equal(corners[0], box.lower)
        np.testing.assert_array_equal(corners[-1], box.upper)
        assert {tuple(c) for c in corners} == {(1.0, 2.0), (1.0, 4.0), (3.0, 2.0), (3.0, 4.0)}

    def test_lower_above_upper(self):
        with pytest.raises(KernelDomainError, match="exceeds"):
            HyperRectangle(lower=np.array([2.0]), upper=np.array([1.0]))

    def test_degenerate(self):
        box = HyperRectangle.degenerate([1.0, 2.0])
        assert box.is_degenerate
        assert box.contains([1.0, 2.0])
        assert not box.contains([1.0, 2.1])

    def test_validate_for_checks_dimension_and_floor(self):
        with pytest.raises(KernelDomainError, match="2-dimensional"):
            HyperRectangle(lower=np.array([1.0]), upper=np.array([2.0])).validate_for(KernelFamily.rq(1))
        with pytest.raises(KernelDomainError):
            HyperRectangle(lower=np.array([0.0, 1.0]), upper=np.array([1.0, 1.0])).validate_for(
                KernelFamily.matern(0))


class TestCandidateSet:
    def test_reads_plain_list(self, tmp_path):
        path = tmp_path / "cands.json"
        path.write_text(json.dumps(CANDS_JSON), encoding="utf-8")
        cands = CandidateSet.from_file(path)
        assert len(cands) == 2
        assert cands.entries[0].family == KernelFamily.matern(1)
        assert cands.entries[1].family == KernelFamily.se_ard(1)
        assert not cands.unsafe

    def test_written_as_plain_list(self):
        cands = CandidateSet.from_mapping({"entries": CANDS_JSON})
        assert json.loads(cands.to_json()) == CANDS_JSON

    def test_needs_an_entry(self):
        with pytest.raises(KernelDomainError, match="at least one"):
            CandidateSet(entries=())

    def test_entry_missing_corner(self):
        with pytest.raises(KernelDomainError, match="upper"):
            CandidateEntry.from_mapping({"family": "rq", "p": 1, "lower": [1.0, 1.0]})

    def test_singleton_is_degenerate(self):
        spec = KernelSpec(family=KernelFamily.rq(2), phi=np.array([1.0, 0.5]))
        cands = CandidateSet.singleton(spec)
        assert cands.entries[0].box.is_degenerate
        assert cands.entries[0].upper_spec == spec

    def test_certified_requires_both_reports(self):
        entry = CandidateEntry.from_mapping(CANDS_JSON[0])
        assert not entry.certified
        mono = _report(PropertyKind.COMPONENTWISE_MONOTONE, True)
        half = CandidateEntry(family=entry.family, box=entry.box, monotone=mono)
        assert not half.certified
        full = CandidateEntry(
            family=entry.family, box=entry.box, monotone=mono,
            quasiconcave=_report(PropertyKind.LINE_QUASICONCAVE, True))
        assert full.certified


def test_certification_report_mapping():
    entry = CandidateEntry.from_mapping(CANDS_JSON[0])
    checked = CandidateEntry(
        family=entry.family,
        box=entry.box,
        monotone=_report(PropertyKind.COMPONENTWISE_MONOTONE, True),
        quasiconcave=_report(PropertyKind.LINE_QUASICONCAVE, False))
    mapping = CertificationReport(entries=(checked,)).to_mapping()
    assert mapping["passed"] is False
    row = mapping["entries"][0]
    assert row["certified"] is False
    assert [c["check"] for c in row["checks"]] == ["componentwise_monotone", "line_quasiconcave"]
