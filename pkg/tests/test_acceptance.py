"""Acceptance criteria at their stated tolerances.

Each test prints one PASS/FAIL line; the lines are repeated in the pytest
terminal summary. Run this file directly for the lines alone.
"""
import warnings

import pytest

from permcycles import verify
from permcycles.saddle import NonAdmissibleWarning

RESULTS: list[verify.CriterionResult] = []


def _check(res: verify.CriterionResult):
    RESULTS.append(res)
    print(res.line())
    assert res.passed, f"{res.name}: {res.metrics} {res.note}"


@pytest.mark.parametrize("cid", sorted(verify.CRITERIA), ids=lambda i: f"criterion{i:02d}")
def test_criterion(cid):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonAdmissibleWarning)
        _check(verify.CRITERIA[cid]())


if __name__ == "__main__":
    failed = 0
    for cid in sorted(verify.CRITERIA):
        res = verify.CRITERIA[cid]()
        print(res.line(), flush=True)
        failed += not res.passed
    raise SystemExit(1 if failed else 0)
