"""Shared fixtures and the per-criterion acceptance summary."""

import os

import pytest

from hitspec.acceptance import PROFILES

ACCEPTANCE_RESULTS = {}


@pytest.fixture(scope="session")
def acceptance_profile():
    """Acceptance profile; ``HITSPEC_ACCEPTANCE_PROFILE=quick`` for a fast smoke run."""
    return PROFILES[os.environ.get("HITSPEC_ACCEPTANCE_PROFILE", "full")]


@pytest.fixture
def record_criterion():
    def record(number, passed, line):
        ACCEPTANCE_RESULTS[number] = (passed, line)
    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        passed, line = ACCEPTANCE_RESULTS[number]
        tr.write_line(line)
    n_pass = sum(p for p, _ in ACCEPTANCE_RESULTS.values())
    tr.write_line(f"{n_pass}/{len(ACCEPTANCE_RESULTS)} acceptance criteria passed")
