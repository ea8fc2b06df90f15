import math
from pathlib import Path

import numpy as np
import pytest

from psilab.primes import build_mangoldt_table

DATA = Path(__file__).parent / "data"


def mangoldt_by_trial_division(n: int) -> float:
    """Lambda(n) from scratch: log p if n is a power of the prime p."""
    if n < 2:
        return 0.0
    p = 2
    while p * p <= n:
        if n % p == 0:
            while n % p == 0:
                n //= p
            return math.log(p) if n == 1 else 0.0
        p += 1
    return math.log(n)


@pytest.fixture(scope="session")
def table():
    return build_mangoldt_table(300_000)


@pytest.fixture(scope="session")
def zeros_path():
    return DATA / "zeros100.txt"


@pytest.fixture(scope="session")
def zero_table():
    from psilab.paircorr import load_zeros

    return load_zeros(DATA / "zeros100.txt")


@pytest.fixture
def empty_table():
    """A table with every Lambda(n) = 0 (psi identically zero)."""
    from psilab.primes import MangoldtTable

    X = 400_000
    return MangoldtTable(X, np.zeros(X + 1), np.zeros(X + 1))


# --- acceptance summary: one line per criterion -----------------------------

_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _ACCEPTANCE[name] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE):
        number = int(name.split("_")[2])
        label = " ".join(name.split("_")[3:])
        terminalreporter.write_line(f"criterion {number:>2} ({label}): {_ACCEPTANCE[name]}")
