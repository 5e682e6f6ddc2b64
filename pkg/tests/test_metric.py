"""Fuzzy-metric construction, axiom verification, and the rescaling probe."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fuzzfix import (
    Carrier,
    FuzzyMetric,
    InputError,
    SamplingPlan,
    make_tnorm,
    remark3_search,
    standard_fuzzy_metric,
    tnorm_eval,
    verify_fm_axioms,
)

unit = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)

CHECK_NAMES = ("FM-1", "FM-2-forward", "FM-2-reverse", "FM-3", "FM-4", "FM-5", "t-monotone")


def constant_membership(carrier: Carrier, value: float) -> FuzzyMetric:
    return FuzzyMetric(
        carrier,
        lambda x, y, t: np.full(np.broadcast(x, y, t).shape, value),
        make_tnorm("product"),
    )


class TestTNorms:
    @pytest.mark.parametrize("kind", ["minimum", "product", "lukasiewicz"])
    @given(a=unit, b=unit)
    def test_commutative(self, kind, a, b):
        tn = make_tnorm(kind)
        assert tnorm_eval(tn, a, b) == tnorm_eval(tn, b, a)

    @pytest.mark.parametrize("kind", ["minimum", "product", "lukasiewicz"])
    @given(a=unit, b=unit, c=unit)
    def test_associative(self, kind, a, b, c):
        tn = make_tnorm(kind)
        left = tnorm_eval(tn, tnorm_eval(tn, a, b), c)
        right = tnorm_eval(tn, a, tnorm_eval(tn, b, c))
        assert left == pytest.approx(right, abs=1e-15)

    @pytest.mark.parametrize("kind", ["minimum", "product", "lukasiewicz"])
    @given(a=unit, b=unit, c=unit)
    def test_monotone(self, kind, a, b, c):
        tn = make_tnorm(kind)
        lo, hi = min(b, c), max(b, c)
        assert tnorm_eval(tn, a, lo) <= tnorm_eval(tn, a, hi) + 1e-15

    @pytest.mark.parametrize("kind", ["minimum", "product", "lukasiewicz"])
    @given(a=unit)
    def test_identity_exact(self, kind, a):
        assert tnorm_eval(make_tnorm(kind), a, 1.0) == a

    def test_lukasiewicz_identity_is_exact_at_awkward_floats(self):
        # 0.1 + 1.0 - 1.0 != 0.1 in floats; the identity law must still be exact
        assert tnorm_eval(make_tnorm("lukasiewicz"), 0.1, 1.0) == 0.1

    def test_known_values(self):
        assert tnorm_eval(make_tnorm("minimum"), 0.3, 0.7) == 0.3
        assert tnorm_eval(make_tnorm("product"), 0.5, 0.5) == 0.25
        assert tnorm_eval(make_tnorm("lukasiewicz"), 0.5, 0.3) == 0.0
        assert tnorm_eval(make_tnorm("lukasiewicz"), 0.8, 0.7) == pytest.approx(0.5)

    def test_unknown_kind_rejected(self):
        with pytest.raises(InputError):
            make_tnorm("drastic")

    def test_custom_requires_evaluator(self):
        with pytest.raises(InputError):
            make_tnorm("custom")

    def test_custom_evaluator_used(self):
        tn = make_tnorm("custom", evaluator=lambda a, b: a * b)
        assert tnorm_eval(tn, 0.5, 0.5) == 0.25

    def test_arguments_outside_unit_interval_rejected(self):
        with pytest.raises(InputError):
            tnorm_eval(make_tnorm("product"), 1.5, 0.5)

    def test_evaluator_leaving_unit_interval_rejected(self):
        bad = make_tnorm("custom", evaluator=lambda a, b: a + b)
        with pytest.raises(InputError):
            tnorm_eval(bad, 0.8, 0.8)


class TestCarrier:
    def test_points_and_spacing(self):
        c = Carrier(0.0, 1.0, 11)
        assert c.spacing == pytest.approx(0.1)
        assert np.allclose(c.points(), np.linspace(0.0, 1.0, 11))
        assert c.points(5).shape == (5,)

    def test_contains(self):
        c = Carrier(0.0, 1.0, 11)
        assert c.contains(0.5)
        assert c.contains([0.0, 1.0])
        assert not c.contains(1.1)

    @pytest.mark.parametrize("lo,hi,n", [(1.0, 0.0, 11), (0.0, 0.0, 11), (0.0, 1.0, 1)])
    def test_validation(self, lo, hi, n):
        with pytest.raises(InputError):
            Carrier(lo, hi, n)


class TestStandardMetric:
    def test_known_values(self, reference_fm):
        assert reference_fm.value(0.0, 1.0, 1.0) == pytest.approx(0.5)
        assert reference_fm.value(0.0, 0.5, 1.0) == pytest.approx(2.0 / 3.0)
        assert reference_fm.value(0.3, 0.3, 0.7) == 1.0
        assert reference_fm.value(0.0, 1.0, 0.0) == 0.0

    def test_negative_distance_rejected(self, unit_carrier):
        with pytest.raises(InputError):
            standard_fuzzy_metric(lambda x, y: x - y, make_tnorm("product"), unit_carrier)

    def test_asymmetric_distance_rejected(self, unit_carrier):
        with pytest.raises(InputError):
            standard_fuzzy_metric(
                lambda x, y: np.abs(x - y) * (1 + x), make_tnorm("product"), unit_carrier
            )

    def test_nonzero_diagonal_rejected(self, unit_carrier):
        with pytest.raises(InputError):
            standard_fuzzy_metric(
                lambda x, y: np.abs(x - y) + 0.1, make_tnorm("product"), unit_carrier
            )


class TestAxiomVerifier:
    def test_reference_metric_passes_all_checks(self, reference_fm):
        report = verify_fm_axioms(reference_fm, SamplingPlan())
        assert report.passed
        assert tuple(c.name for c in report.checks) == CHECK_NAMES
        for c in report.checks:
            assert c.witness is None
            assert c.samples > 0

    @pytest.mark.parametrize("kind", ["minimum", "lukasiewicz"])
    def test_triangle_holds_under_weaker_tnorms(self, unit_carrier, kind):
        # product-triangle implies the lukasiewicz one; minimum holds for
        # the standard membership as well
        fm = standard_fuzzy_metric(
            lambda x, y: np.abs(x - y), make_tnorm(kind), unit_carrier
        )
        report = verify_fm_axioms(fm, SamplingPlan(grid_n=13, n_random=200))
        assert report.check("FM-4").status == "pass"

    def test_constant_membership_fails_fm2_forward(self, unit_carrier):
        report = verify_fm_axioms(constant_membership(unit_carrier, 0.5), SamplingPlan())
        check = report.check("FM-2-forward")
        assert check.status == "fail"
        assert check.witness is not None
        assert check.witness["value"] == pytest.approx(0.5)
        assert not report.passed

    def test_constant_membership_fails_fm1(self, unit_carrier):
        report = verify_fm_axioms(constant_membership(unit_carrier, 0.5), SamplingPlan())
        check = report.check("FM-1")
        assert check.status == "fail"
        assert check.witness["t"] == 0.0

    def test_constant_one_fails_fm2_reverse(self, unit_carrier):
        report = verify_fm_axioms(constant_membership(unit_carrier, 1.0), SamplingPlan())
        check = report.check("FM-2-reverse")
        assert check.status == "fail"
        assert check.witness["x"] != check.witness["y"]

    def test_asymmetric_membership_fails_fm3(self, unit_carrier):
        fm = FuzzyMetric(
            unit_carrier,
            lambda x, y, t: np.where(
                t > 0, t / np.where(t > 0, t + np.maximum(x - y, 0.0), 1.0), 0.0
            ),
            make_tnorm("product"),
        )
        report = verify_fm_axioms(fm, SamplingPlan(n_random=100))
        check = report.check("FM-3")
        assert check.status == "fail"
        assert check.witness is not None

    def test_decreasing_in_t_fails_monotonicity(self, unit_carrier):
        fm = FuzzyMetric(
            unit_carrier,
            lambda x, y, t: np.where(t > 0, 1.0 / (1.0 + t * (1.0 + np.abs(x - y))), 0.0),
            make_tnorm("product"),
        )
        report = verify_fm_axioms(fm, SamplingPlan(n_random=100))
        assert report.check("t-monotone").status == "fail"

    def test_triangle_failure_has_full_witness(self, unit_carrier):
        # sub-additive in t with a steep cliff: M(x,z,t+s) can drop below
        # the product of the one-leg values
        fm = FuzzyMetric(
            unit_carrier,
            lambda x, y, t: np.where(
                t > 0, np.exp(-np.abs(x - y) * (1.0 + 1.0 / np.maximum(t, 1e-9))), 0.0
            ),
            make_tnorm("minimum"),
        )
        report = verify_fm_axioms(fm, SamplingPlan(grid_n=9, n_random=100))
        check = report.check("FM-4")
        if check.status == "fail":
            for key in ("x", "y", "z", "t", "s", "margin"):
                assert key in check.witness

    def test_report_dict_round_trip(self, reference_fm):
        doc = verify_fm_axioms(reference_fm, SamplingPlan(grid_n=7, n_random=50)).to_dict()
        assert doc["passed"] is True
        assert [c["name"] for c in doc["checks"]] == list(CHECK_NAMES)

    def test_deterministic_across_jobs(self, reference_fm):
        one = verify_fm_axioms(reference_fm, SamplingPlan(jobs=1)).to_dict()
        four = verify_fm_axioms(reference_fm, SamplingPlan(jobs=4)).to_dict()
        assert one == four

    def test_seed_changes_random_samples_not_verdict(self, reference_fm):
        a = verify_fm_axioms(reference_fm, SamplingPlan(seed=0))
        b = verify_fm_axioms(reference_fm, SamplingPlan(seed=1))
        assert a.passed and b.passed

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"grid_n": 1},
            {"t_grid": ()},
            {"t_grid": (0.0, 1.0)},
            {"t_grid": (-1.0,)},
            {"n_random": -1},
        ],
    )
    def test_plan_validation(self, kwargs):
        with pytest.raises(InputError):
            SamplingPlan(**kwargs)


class TestRescalingProbe:
    def test_genuine_metric_has_no_witness(self, reference_fm):
        assert remark3_search(reference_fm, 0.5, SamplingPlan()) is None

    def test_time_independent_membership_yields_witness(self, unit_carrier):
        fm = FuzzyMetric(
            unit_carrier,
            lambda x, y, t: np.broadcast_to(
                1.0 / (1.0 + np.abs(x - y)), np.broadcast(x, y, t).shape
            ).copy(),
            make_tnorm("product"),
        )
        hit = remark3_search(fm, 0.5, SamplingPlan())
        assert hit is not None
        assert hit["x"] != hit["y"]
        assert hit["r"] == 0.5

    @pytest.mark.parametrize("r", [0.0, 1.0, -0.5, 2.0])
    def test_rescaling_factor_validated(self, reference_fm, r):
        with pytest.raises(InputError):
            remark3_search(reference_fm, r, SamplingPlan())
