import pytest

from .. import acceptance
from ..acceptance import (
    CRITERIA,
    CriterionResult,
    downplaying_rescales,
    evaluate,
    format_report,
    invariant_suite,
    run_acceptance,
)


class TestCriteria:
    """Exact criteria of the acceptance suite; the statistical ones run through the CLI."""

    @pytest.mark.parametrize("key", ["A1", "A2", "A3", "A4", "A5"])
    def test_exact_reductions(self, key):
        result = evaluate(key)
        assert result.error is None
        assert result.passed, result.line()

    def test_exact_hessian_sees_stale_updates(self):
        measured = acceptance.exact_hessian_compensation()
        assert measured["max_delay"] >= 3
        assert measured["max_error"] <= 1e-12

    def test_buffer_ablation(self):
        result = evaluate("A9")
        assert result.passed, result.line()

    def test_invariants(self):
        measured = invariant_suite(n_cases=2000)
        assert measured["passed"], measured["broken"]

    def test_downplaying_rescales(self):
        assert downplaying_rescales()

    def test_every_criterion_is_registered(self):
        assert list(CRITERIA) == [f"A{i}" for i in range(1, 11)]


class TestReport:
    def test_failing_check_is_reported(self, monkeypatch):
        def broken():
            raise RuntimeError("boom")

        monkeypatch.setitem(CRITERIA, "A1", ("broken check", broken))
        result = evaluate("A1")
        assert not result.passed
        assert result.error == "RuntimeError: boom"
        assert result.line() == "A1 FAIL broken check: error=RuntimeError: boom"

    def test_unknown_key(self):
        with pytest.raises(ValueError, match="unknown acceptance criteria"):
            run_acceptance(["A0"])

    def test_format_report(self):
        results = [
            CriterionResult("A1", "first", True, {"max_gap": 0.0}),
            CriterionResult("A2", "second", False, {"max_gap": 0.125, "max_delay": 7}),
        ]
        assert format_report(results).splitlines() == [
            "A1 PASS first: max_gap=0",
            "A2 FAIL second: max_gap=0.125 max_delay=7",
            "1/2 criteria passed",
        ]
