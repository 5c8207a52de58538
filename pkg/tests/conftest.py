import pytest

from rmfsign.sieve import SieveEngine, simple_sieve


@pytest.fixture(scope="session")
def small_engine():
    """Engine with tiny blocks so multi-block code paths run on small inputs."""
    return SieveEngine(block_size=1000)


@pytest.fixture(scope="session")
def naive_primes_1e6():
    return simple_sieve(10**6)


# --- acceptance summary ----------------------------------------------------


def pytest_configure(config):
    config._acceptance_lines = []


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line for an acceptance criterion and print it."""

    def record(number: int, title: str, ok: bool, detail: str) -> bool:
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d} {title}: {detail}"
        request.config._acceptance_lines.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
