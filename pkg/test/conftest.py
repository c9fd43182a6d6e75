#!/usr/bin/env python
import logging

import pytest


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False,
                     help='Run the acceptance-size suites')


def pytest_configure(config):
    config.addinivalue_line(
            "markers", "slow: mark test as an acceptance-size suite, run with --runslow"
            )


def pytest_runtest_setup(item):
    for _ in item.iter_markers(name='slow'):
        if not item.config.getoption('runslow'):
            pytest.skip('Slow suite, use --runslow')


# Keep solver warnings out of the test output
@pytest.fixture(autouse=True)
def quiet_solvers():
    logger = logging.getLogger('clasp_debug')
    level = logger.level
    logger.setLevel(logging.ERROR)
    yield
    logger.setLevel(level)
