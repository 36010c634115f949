import pytest

from alphaduplex.geometry import reference_config
from alphaduplex.simulate import SimSpec

# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, title: str, passed: bool, detail: str):
    ACCEPTANCE_LINES[number] = f"criterion {number} [{'PASS' if passed else 'FAIL'}] {title}: {detail}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture(scope="session")
def cfg():
    return reference_config()


@pytest.fixture(scope="session")
def small_sim():
    # about 100 BSs; enough for structural checks, fast on one core
    return SimSpec(region_half_width=3_000.0, observation_half_width=800.0, realizations=12, seed=11)


_MC_CACHE: dict = {}


def full_scale_samples(cfg, topology: str, alpha: float):
    """Default-scale simulation samples, shared by every test module."""
    from alphaduplex.analytic import make_context
    from alphaduplex.simulate import collect_samples

    key = (cfg, topology, alpha)
    if key not in _MC_CACHE:
        ctx = make_context(cfg, topology, alpha)
        _MC_CACHE[key] = ctx, collect_samples(cfg, topology, ctx.factors, SimSpec())
    return _MC_CACHE[key]
