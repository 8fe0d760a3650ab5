"""Acceptance criteria at full scale; one PASS/FAIL line per criterion is
printed in the terminal summary."""

import time

import pytest

from setupfree import kernels
from setupfree.crypto_core import get_suite
from setupfree.harness.presets import PRESETS, secrecy_views

# wall-clock budgets in seconds; None where the criterion names none
BUDGETS = {"c1": 120, "c2": None, "c3": 300, "c4": 180, "c5": 60, "c6": 300,
           "c7": 600, "c8": 600, "c9": 900, "c10": None}

LINES = []

pytestmark = pytest.mark.slow


@pytest.mark.parametrize("key", list(PRESETS))
def test_criterion(key):
    t0 = time.perf_counter()
    res = PRESETS[key](1.0)
    took = time.perf_counter() - t0
    budget = BUDGETS[key]
    in_time = budget is None or took <= budget
    for c in res.checks:
        LINES.append(f"    {c.line()}")
    LINES.append(f"{'PASS' if res.ok and in_time else 'FAIL'}  {key.upper():<4}{res.title} ({took:.1f}s"
                 + (f", budget {budget}s)" if budget else ")"))
    failed = [c.line() for c in res.checks if not c.ok]
    assert not failed, failed
    assert in_time, f"{took:.1f}s over the {budget}s budget"


def test_secrecy_oracle_alone_within_a_minute():
    t0 = time.perf_counter()
    suite = get_suite("mock")
    g = suite.group
    for cmt, xs, sa, sb in secrecy_views(5):
        counts = kernels.pedersen_completions(suite.q, g.g1, g.g2, cmt, xs, sa, sb)
        assert counts.min() == counts.max() > 0
    took = time.perf_counter() - t0
    LINES.append(f"{'PASS' if took <= 60 else 'FAIL'}  C1s secrecy counting oracle, q=97 ({took:.1f}s, budget 60s)")
    assert took <= 60


def test_non_reproducibility_note():
    LINES.append("NOTE  C11 not reproduced: asymptotic constants and real-crypto performance at large "
                 "security parameters; the slopes and invariants above stand in for them")
