from pathlib import Path

import numpy as np
import pytest

from trapquench.basis import enumerate_basis
from trapquench.hobasis import DeltaIntegralTable, HoParams

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def table16():
    return DeltaIntegralTable.build(HoParams(16))


@pytest.fixture(scope="session")
def basis16():
    return enumerate_basis(16, 16)


@pytest.fixture(scope="session")
def oracle_values():
    """Frozen grid-oracle energies keyed by coupling."""
    rows = np.loadtxt(DATA / "oracle_values.txt", comments="#", ndmin=2)
    return {float(r[0]): (float(r[1]), float(r[2])) for r in rows}


def ho_explicit(n, x):
    """HO eigenfunction from the explicit Hermite polynomial (low n only)."""
    from math import factorial, pi, sqrt

    from scipy.special import eval_hermite

    return eval_hermite(n, x) * np.exp(-x * x / 2) / sqrt(2.0 ** n * factorial(n) * sqrt(pi))


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("tests.test_acceptance")
    report = getattr(mod, "REPORT", None)
    if not report:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(report):
        ok, detail = report[num]
        terminalreporter.write_line(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
