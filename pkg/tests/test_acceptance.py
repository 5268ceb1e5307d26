"""Acceptance suite: one pass/fail line per criterion.

Run ``pytest tests/test_acceptance.py -s`` to see the measured values.
"""

from __future__ import annotations

import inspect

import pytest

from lochardy import corpus
from lochardy.verify import CHECKS, TOLERANCES

PINNED = {
    "cover_runtime_s": 30.0,
    "partition": 1e-12,
    "reconstruction": 1e-10,
    "t1_ratio": 100.0,
    "l1q": 1e-12,
    "dirac": 1e-12,
    "calculus": 1e-6,
    "calculus_runtime_s": 120.0,
    "calderon": 1e-8,
    "default_pair": 1e-12,
    "reproducing": 1e-3,
    "reproducing_order": 1.0,
    "riesz_slack": 1e-9,
    "riesz_routes": 1e-6,
    "offdiag_stability": 10.0,
    "molecule_uniformity": 10.0,
    "maximal_stability": 5.0,
}


@pytest.fixture(scope="module")
def spaces():
    return corpus.space_corpus(corpus.DEFAULT_SEED)


def test_tolerances_are_pinned():
    assert TOLERANCES == PINNED
    assert sorted(CHECKS) == list(range(1, 13))


@pytest.mark.parametrize("number", sorted(CHECKS))
def test_criterion(number, spaces):
    check = CHECKS[number]
    kwargs = {"spaces": spaces} if "spaces" in inspect.signature(check).parameters else {}
    result = check(**kwargs)
    print(result.line())
    assert result.passed, result.line()
