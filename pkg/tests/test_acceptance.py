"""Acceptance suite: one measured pass/fail line per criterion."""

import pytest

import criteria


@pytest.mark.slow
@pytest.mark.parametrize("k", range(1, 11))
def test_criterion(k, capsys):
    passed, detail = criteria.ALL[k - 1]()
    with capsys.disabled():
        print(f"\ncriterion {k}: {'PASS' if passed else 'FAIL'} {detail}")
    assert passed, detail
