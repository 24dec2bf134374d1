"""Acceptance gate: every criterion at its stated tolerance and budget.

One pass/fail line prints per criterion (run with ``pytest -s`` to see
them); criterion functions live in gramclust.acceptance so the CLI
selftest exercises exactly the same checks.
"""

import pytest

from gramclust.acceptance import ALL_CRITERIA, Shared


@pytest.fixture(scope="module")
def shared():
    return Shared()


@pytest.mark.parametrize("criterion", ALL_CRITERIA, ids=lambda fn: fn.__name__)
def test_criterion(criterion, shared):
    result = criterion(shared)
    print(result.summary())
    for warning in result.warnings:
        print(f"  warning: {warning}")
    failing = [row for row in result.rows if not row.get("ok")]
    assert result.passed, (
        f"{result.name}: {len(failing)} failing checks; first: "
        f"{failing[0] if failing else 'budget exceeded'}"
    )
