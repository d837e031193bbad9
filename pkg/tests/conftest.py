import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(20240611))


@pytest.fixture(scope="session")
def f1_truth():
    from msdecomp import synth
    return synth.generate(synth.fixture_f1())


@pytest.fixture(scope="session")
def f1_multiscale(f1_truth):
    from msdecomp import synth
    return synth.to_multiscale(f1_truth, synth.F1_WINDOW, synth.F1_FACTOR)


@pytest.fixture(scope="session")
def f1_result(f1_multiscale):
    """Default-config decomposition of the F1 window, shared across modules."""
    from msdecomp import pipeline
    timings = {}
    d, report = pipeline.decompose(f1_multiscale, timings=timings)
    return d, report, timings


# -- acceptance summary -----------------------------------------------------------

_CRITERIA: dict[int, str] = {}


@pytest.fixture
def criterion():
    """``criterion(n, passed, detail)`` records one acceptance line and prints it."""
    def record(number: int, passed: bool, detail: str) -> bool:
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        _CRITERIA[number] = line
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_CRITERIA):
            terminalreporter.write_line(_CRITERIA[number])
