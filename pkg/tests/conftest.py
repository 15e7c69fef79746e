import time

import pytest

from merodyn import Window, make_exponential, make_tangent, render_plane

ACCEPTANCE_LINES: list[str] = []


def record(number: int, passed: bool, detail: str) -> str:
    line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return line


@pytest.fixture(scope="session")
def tan():
    return make_tangent()


@pytest.fixture(scope="session")
def exp_family():
    return make_exponential()


@pytest.fixture(scope="session")
def tan512(tan):
    """The tangent plane on [-6, 6]^2 at 512 x 512, plus its wall time."""
    render_plane(tan, Window.square(6.0), (8, 8))  # compile outside the timing
    t0 = time.perf_counter()
    grid = render_plane(tan, Window.square(6.0), (512, 512))
    return grid, time.perf_counter() - t0


@pytest.fixture(scope="session")
def tan128(tan):
    return render_plane(tan, Window.square(6.0), (128, 128))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
