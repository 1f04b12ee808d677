"""Release gate: every criterion runs at its stated tolerance and prints one
pass/fail line.  Run with `pytest tests/test_acceptance.py -v -s` or through
the CLI as `stoqsim fixtures`."""

import json

import pytest

from stoqsim import acceptance


@pytest.mark.parametrize(
    "criterion",
    acceptance.ALL_CRITERIA,
    ids=[f"criterion-{i}" for i in range(1, len(acceptance.ALL_CRITERIA) + 1)],
)
def test_criterion(criterion):
    result = criterion(quick=False)
    status = "PASS" if result.passed else "FAIL"
    print(f"{status} {result.ident}: {result.name} ({result.runtime_s:.1f}s)")
    assert result.passed, json.dumps(result.details, indent=2, default=str)
