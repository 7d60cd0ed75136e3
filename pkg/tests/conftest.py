import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fatratio.phantom import Blob, PhantomSpec, generate_phantom  # noqa: E402

# filled by tests/test_acceptance.py, printed once at the end of the run
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture
def record():
    """Store one acceptance outcome for the end-of-run summary."""

    def _record(n: int, ok: bool, detail: str) -> None:
        ACCEPTANCE[n] = (bool(ok), detail)

    return _record


@pytest.fixture(scope="session")
def disk_phantom():
    """Ring 50-100 with a centered visceral disk of radius 20."""
    return generate_phantom(PhantomSpec(blobs=(Blob(0.0, 0.0, 20.0),)))


@pytest.fixture(scope="session")
def ring_phantom():
    return generate_phantom(PhantomSpec())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
