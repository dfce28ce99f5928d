import numpy as np
import pytest

from nlskt import config
from nlskt.grid import Domain
from nlskt.kernel import KernelSpec, build_table


def benchmark(cells=64, **overrides):
    """Domain, table, coefficients and initial state of the default config."""
    items = [f"domain.cells={cells}"] + [f"{k.replace('__', '.')}={v}" for k, v in overrides.items()]
    cfg = config.validate(config.parse("", items))
    dom = config.build_domain(cfg)
    return dom, config.build_kernel(cfg, dom), config.build_coeffs(cfg), config.initial_state(cfg, dom)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def unit64():
    dom = Domain.interval(0.0, 1.0, 64)
    return dom, build_table(KernelSpec("uniform-ball", 0.25), dom)


ACCEPTANCE: list[str] = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line per acceptance criterion and assert on it."""
    def record(label: str, ok: bool, detail: str = ""):
        line = f"{label}: {'PASS' if ok else 'FAIL'}" + (f" ({detail})" if detail else "")
        ACCEPTANCE.append(line)
        print(line)
        assert ok, line
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
