"""One line per acceptance criterion; run with ``pytest tests/test_acceptance.py -s`` to see them."""

import pytest

from meshratio import acceptance


@pytest.mark.parametrize("criterion", acceptance.CRITERIA, ids=lambda c: f"criterion_{c[0]:02d}")
def test_criterion(criterion):
    result = acceptance.run_criterion(criterion[0])
    print(result.line())
    assert result.passed, result.line()
