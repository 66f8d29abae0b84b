import numpy as np
import pytest

from hamtopo.domain import Domain
from hamtopo.flow import integrate_flow
from hamtopo.gallery import random_hamiltonian, shear_hamiltonian

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by this test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.failed):
        number, title = marker.args
        detail = "; ".join(f"{k}={v}" for k, v in item.user_properties)
        # parametrized criteria pass only if every case passes
        _, outcomes, details = _CRITERIA.get(number, (title, [], []))
        _CRITERIA[number] = (title, outcomes + [report.outcome], details + ([detail] if detail else []))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, outcomes, details = _CRITERIA[number]
        status = "PASS" if all(o == "passed" for o in outcomes) else "FAIL"
        line = f"criterion {number:>2} {status}  {title}"
        if details:
            line += "  " + " ".join(f"[{d}]" for d in details)
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def torus32():
    return Domain.torus(32)


@pytest.fixture(scope="session")
def torus64():
    return Domain.torus(64)


@pytest.fixture(scope="session")
def disc64():
    return Domain.disc(64)


@pytest.fixture(scope="session")
def shear64(torus64):
    H = shear_hamiltonian(torus64, 41)
    return H, integrate_flow(H, 400)


@pytest.fixture(scope="session")
def random_flows64(torus64):
    """Six seeded random Hamiltonians and their flows."""
    out = []
    for seed in range(6):
        H = random_hamiltonian(seed, torus64, 41)
        out.append((H, integrate_flow(H, 400)))
    return out


def rng(seed=0):
    return np.random.default_rng(seed)
