import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("qanm", deadline=None, max_examples=40)
settings.load_profile("qanm")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_unit(rng, n):
    v = rng.normal(size=n)
    return v / np.linalg.norm(v)


def diag_dominant(rng, n, margin=1.0):
    K = rng.normal(size=(n, n))
    K[np.diag_indices(n)] = np.abs(K).sum(axis=1) + margin
    return K


# acceptance criteria verdicts, printed once at the end of the run
ACCEPTANCE: dict[int, list[tuple[bool, str]]] = {}


def record_criterion(number: int, ok: bool, detail: str) -> bool:
    ACCEPTANCE.setdefault(number, []).append((bool(ok), detail))
    print(f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}")
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[number]
        ok = all(p[0] for p in parts)
        detail = "; ".join(p[1] for p in parts)
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}")
