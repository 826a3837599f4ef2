"""One test per acceptance criterion; each prints a single pass/fail line.

Criteria whose bound sits below what the dynamics can reach are marked as
strict expected failures; every other check inside them must still pass.
"""

import pytest

from spinclock.acceptance import CRITERIA, KNOWN_LIMITS, run_criterion

LIMITED = {k for k, _ in KNOWN_LIMITS}


def _criterion(k):
    marks = []
    if k in LIMITED:
        names = ", ".join(n for j, n in KNOWN_LIMITS if j == k)
        marks.append(pytest.mark.xfail(strict=True, reason=f"bound not reachable: {names}"))
    return pytest.param(k, id=f"criterion_{k:02d}", marks=marks)


@pytest.mark.parametrize("k", [_criterion(k) for k in sorted(CRITERIA)])
def test_criterion(k):
    r = run_criterion(k)
    print(r.line())
    assert r.passed, r.line()


@pytest.mark.parametrize("k", sorted(LIMITED), ids=lambda k: f"criterion_{k:02d}")
def test_limited_criterion_other_checks(k):
    r = run_criterion(k)
    bad = [c for c in r.failed() if c.known_limit is None]
    assert not bad, r.line()
    failed_names = {c.name for c in r.failed()}
    assert failed_names <= {n for j, n in KNOWN_LIMITS if j == k}
