import pytest

_ACCEPTANCE: list[str] = []


@pytest.fixture
def acceptance():
    """Record one [PASS]/[FAIL] line per acceptance criterion."""
    def record(number: int, title: str, passed: bool, detail: str = ""):
        tag = "PASS" if passed else "FAIL"
        _ACCEPTANCE.append(f"[{tag}] criterion {number:2d}: {title}" + (f" | {detail}" if detail else ""))
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
        terminalreporter.write_line(line)


# --- shared long simulations (run once per session) ---------------------------

@pytest.fixture(scope="session")
def running_run():
    from cphdae.solver import IntegratorConfig, consistent_point, integrate
    from util import running_system
    s = running_system()
    cp = consistent_point(s, 0.0, guess=1.0)
    return s, cp, integrate(s, cp, IntegratorConfig(order=2, rtol=1e-6), 0.2)


@pytest.fixture(scope="session")
def diode_run():
    from cphdae import circuits
    from cphdae.solver import IntegratorConfig, consistent_point, integrate
    from util import system_of
    s = system_of(circuits.diode_clipper())
    cp = consistent_point(s, 0.0, guess=0.0)
    return s, cp, integrate(s, cp, IntegratorConfig(order=2, rtol=1e-6, atol=1e-9), 0.03)


@pytest.fixture(scope="session")
def lc_run():
    import numpy as np
    from cphdae import circuits
    from cphdae.solver import IntegratorConfig, consistent_point, integrate
    from util import system_of
    s = system_of(circuits.lc_loop())
    cp = consistent_point(s, 0.0, guess=[1.0, 0.0])
    return s, cp, integrate(s, cp, IntegratorConfig(order=2, rtol=1e-8, atol=1e-10), 20 * np.pi)
