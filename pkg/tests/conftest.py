import numpy as np
import pytest

from hexice.hamiltonian import ModelParams, ice_sector


@pytest.fixture(scope="session")
def params() -> ModelParams:
    return ModelParams()


@pytest.fixture(scope="session")
def ice(params):
    return ice_sector(params)


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


def random_density(rng, d: int, rank: int | None = None) -> np.ndarray:
    rank = rank or d
    G = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, title: str, checks: list[tuple[str, bool]]) -> bool:
    """Store and print one PASS/FAIL line for an acceptance criterion."""
    ok = all(passed for _, passed in checks)
    failed = [name for name, passed in checks if not passed]
    detail = "all checks met" if ok else "failed: " + "; ".join(failed)
    line = f"criterion {number:2d} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])
