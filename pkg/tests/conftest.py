import functools

import pytest

from icelattice.lattice import build_domain


@functools.lru_cache(maxsize=None)
def domain(kind, n):
    return build_domain(kind, n)


@pytest.fixture
def dom():
    return domain


KINDS = ("tri", "kagome", "3464")


# acceptance results, filled by tests/test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"CRITERION {k:2d} {'PASS' if ok else 'FAIL'}  {detail}")
