"""Acceptance suite: one PASS/FAIL line per criterion, then an assertion."""
import pytest

from bcdebranges import validate

SEED = validate.seed_from_env()


def _report(result):
    status = "PASS" if result["passed"] else "FAIL"
    print(f"\n[{status}] criterion {result['id']:>2} ({result['module']}): {result['name']} {result['metrics']}")


@pytest.mark.parametrize("criterion", validate.CRITERIA, ids=lambda c: f"{c.number:02d}-{c.module}")
def test_criterion(criterion):
    result = validate.run_criterion(criterion, SEED)
    _report(result)
    assert result["passed"], result["metrics"]


def test_criterion_14_determinism():
    passed, metrics = validate.determinism_check(SEED)
    _report({"id": 14, "module": "cli", "name": "report determinism", "passed": passed, "metrics": metrics})
    assert passed
