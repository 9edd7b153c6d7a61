import numpy as np
import pytest

from riclink import kernels

PSK_SIZES = [2, 4, 8, 16, 32, 64, 128, 256, 512, 1024]
QAM_SIZES = [4, 8, 16, 32, 64, 128, 256, 512, 1024]
SQUARE_QAM_SIZES = [4, 16, 64, 256, 1024]


@pytest.fixture
def rng():
    return np.random.default_rng(20261018)


@pytest.fixture(params=kernels.available_backends(), ids=lambda b: b.BACKEND)
def backend(request):
    return request.param


ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


@pytest.fixture
def acceptance():
    def record(name: str, ok: bool, detail: str) -> None:
        ACCEPTANCE_RESULTS.append((name, bool(ok), detail))
        assert ok, f"{name}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  ({detail})")
