import warnings

import numpy as np
import pytest

from resdecay import BoxMode, DeltaShell, DoubleBarrier, build_expansion, find_poles
from resdecay.dynamics import TruncationWarning

ACCEPTANCE = {}


def pytest_configure(config):
    warnings.simplefilter("ignore", TruncationWarning)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        clauses = ACCEPTANCE[num]
        ok = all(c[1] for c in clauses)
        detail = "; ".join(f"{name}: {'ok' if good else 'FAIL'} ({info})" for name, good, info in clauses)
        terminalreporter.write_line(f"criterion {num:>2}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def record():
    def _record(num, clause, ok, info):
        ACCEPTANCE.setdefault(num, []).append((clause, bool(ok), info))
        return bool(ok)
    return _record


@pytest.fixture(scope="session")
def ds():
    return DeltaShell(lam=100.0, a=1.0)


@pytest.fixture(scope="session")
def db():
    return DoubleBarrier(V=40.0, b=1.0, w=1.0)


@pytest.fixture(scope="session")
def ds_poles(ds):
    return find_poles(ds, 1000)


@pytest.fixture(scope="session")
def db_poles(db):
    return find_poles(db, 50)


@pytest.fixture(scope="session")
def ds_expansion(ds, ds_poles):
    return build_expansion(ds_poles, {"alpha": BoxMode.for_spec(ds, 1), "beta": BoxMode.for_spec(ds, 6)})


@pytest.fixture(scope="session")
def db_expansion(db, db_poles):
    return build_expansion(db_poles, BoxMode.for_spec(db, 1))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
