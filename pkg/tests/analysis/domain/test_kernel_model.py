import numpy as np
import pytest

from gpbound.analysis.domain.kernel_model import FamilyKind, KernelFamily, KernelSpec
from gpbound.helper.errors import KernelDomainError


class TestKernelFamily:
    @pytest.mark.parametrize(
        ("family", "n_hyper"),
        [
            (KernelFamily.poly(2), 1),
            (KernelFamily.rq(1), 2),
            (KernelFamily.matern(0), 2),
            (KernelFamily.se_ard(3), 4),
        ],
    )
    def test_hyperparameter_count(self, family, n_hyper):
        assert family.n_hyper == n_hyper

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"kind": FamilyKind.POLY, "p": 0},
            {"kind": FamilyKind.RQ, "p": 1.5},
            {"kind": FamilyKind.MATERN, "p": 3},
            {"kind": FamilyKind.SE_ARD, "n_x": 0},
            {"kind": FamilyKind.SE_ARD, "n_x": 1, "p": 2},
        ],
    )
    def test_invalid_structure(self, kwargs):
        with pytest.raises(KernelDomainError):
            KernelFamily(**kwargs)

    def test_of_ignores_n_x_except_for_se_ard(self):
        assert KernelFamily.of("rq", p=2, n_x=5) == KernelFamily.rq(2)
        assert KernelFamily.of("se_ard", n_x=2) == KernelFamily.se_ard(2)

    def test_polynomial_floor_is_zero(self):
        assert KernelFamily.poly(1).phi_floor == 0.0
        KernelFamily.poly(1).validate_phi([0.0])
        with pytest.raises(KernelDomainError, match=">="):
            KernelFamily.matern(1).validate_phi([0.0, 1.0])

    def test_se_ard_n_x_inferred_from_phi(self):
        family = KernelFamily.from_mapping({"family": "se_ard"}, n_hyper=3)
        assert family == KernelFamily.se_ard(2)

    def test_unknown_family(self):
        with pytest.raises(KernelDomainError, match="unknown kernel family"):
            KernelFamily.from_mapping({"family": "periodic"})


class TestKernelSpec:
    def test_phi_is_read_only(self):
        spec = KernelSpec(family=KernelFamily.rq(1), phi=np.array([1.0, 2.0]))
        with pytest.raises(ValueError):
            spec.phi[0] = 3.0

    def test_wrong_length(self):
        with pytest.raises(KernelDomainError, match="expects 2"):
            KernelSpec(family=KernelFamily.rq(1), phi=np.array([1.0]))

    def test_non_finite(self):
        with pytest.raises(KernelDomainError, match="finite"):
            KernelSpec(family=KernelFamily.rq(1), phi=np.array([np.inf, 1.0]))

    def test_mapping_form(self):
        spec = KernelSpec(family=KernelFamily.se_ard(2), phi=np.array([1.0, 2.0, 0.5]))
        assert spec.to_mapping() == {"family": "se_ard", "phi": [1.0, 2.0, 0.5]}
        assert KernelSpec.from_mapping(spec.to_mapping()) == spec

    def test_missing_phi(self):
        with pytest.raises(KernelDomainError, match="phi"):
            KernelSpec.from_mapping({"family": "rq", "p": 1})

    def test_hashable_by_value(self):
        a = KernelSpec(family=KernelFamily.matern(2), phi=np.array([1.0, 1.0]))
        b = a.with_phi([1.0, 1.0])
        assert a == b
        assert len({a, b}) == 1
