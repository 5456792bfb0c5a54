"""Shared fixtures and the acceptance-summary terminal hook."""

import pytest

import hyperdyn as hd

_CRITERIA = []


def record_criterion(num, label, ok, detail=""):
    _CRITERIA.append((num, label, bool(ok), detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num, label, ok, detail in sorted(_CRITERIA):
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(
            "criterion %2d [%s] %s: %s" % (num, status, label, detail))


@pytest.fixture(scope="session")
def canonical():
    entry = hd.catalog.build("canonical")
    cert = hd.certify(entry.operator, entry.splitting, *entry.window)
    return entry, cert


@pytest.fixture(scope="session")
def diagonal():
    entry = hd.catalog.build("hyperbolic_diagonal")
    cert = hd.certify(entry.operator, entry.splitting, *entry.window)
    return entry, cert
