import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE: dict = {}


def record(n: int, ok: bool, detail: str = ""):
    """Store the verdict for acceptance criterion ``n``; printed once at the end."""
    ACCEPTANCE[n] = (ok, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        if ok is None:
            verdict = "SKIP"
        else:
            verdict = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"criterion {n:>2}: {verdict}  {detail}")
