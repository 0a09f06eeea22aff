import os
import warnings

import pytest
from hypothesis import HealthCheck, settings

warnings.filterwarnings("ignore", message=".*first-class function.*")

# numba compiles kernels on first call, so per-example deadlines are meaningless
settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def cache_dir(tmp_path_factory):
    """Reference cache shared by the session (MTIBENCH_CACHE_DIR if set, else a temp dir)."""
    d = os.environ.get("MTIBENCH_CACHE_DIR") or str(tmp_path_factory.mktemp("refcache"))
    os.makedirs(d, exist_ok=True)
    return d


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line for an acceptance criterion and return the outcome."""
    lines = request.config.stash.setdefault(_ACCEPTANCE, [])

    def emit(n: int, ok: bool, detail: str) -> bool:
        line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}"
        print(line)
        lines.append(line)
        return ok
    return emit


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
