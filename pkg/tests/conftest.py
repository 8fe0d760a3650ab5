import random

import pytest
from hypothesis import HealthCheck, settings

from setupfree.crypto_core import KeyRing, get_suite
from setupfree.reactor import Node

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def suite():
    return get_suite("mock")


@pytest.fixture
def keys(suite):
    return KeyRing.generate(4, suite, seed=0)


def make_node(me, n=4, f=1, suite=None, keys=None, seed=0):
    suite = suite or get_suite("mock")
    keys = keys or KeyRing.generate(n, suite, seed=seed)
    return Node(me, n, f, suite, keys, seed=seed)


@pytest.fixture
def rng():
    return random.Random(1234)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import LINES

    if LINES:
        terminalreporter.section("acceptance criteria")
        for line in LINES:
            terminalreporter.write_line(line)
