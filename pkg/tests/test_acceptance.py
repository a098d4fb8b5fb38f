"""The eleven acceptance criteria at their stated tolerances.

The suite runs once per session; each criterion is reported as a single
PASS/FAIL line and asserted separately.
"""

import pytest

from bagres.acceptance import CRITERIA, run_suite
from bagres.core import LabConfig


@pytest.fixture(scope="module")
def results():
    return {r.number: r for r in run_suite(LabConfig())}


@pytest.mark.slow
@pytest.mark.parametrize("number", [n for n, _, _ in CRITERIA])
def test_criterion(results, number, capsys):
    r = results[number]
    with capsys.disabled():
        print("\n" + r.line())
    assert r.passed, r.line()
