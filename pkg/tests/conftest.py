import numpy as np
import pytest

from irs_isac.scene import ChannelSet


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def random_hermitian(rng, n, psd=False):
    B = crandn(rng, n, n)
    return B.conj().T @ B if psd else 0.5 * (B + B.conj().T)


def random_channels(rng, N=3, L=4, K=2, alpha_T=None):
    a = np.exp(1j * rng.uniform(0, 2 * np.pi, L))
    alpha = complex(crandn(rng, 1)[0]) if alpha_T is None else alpha_T
    return ChannelSet(
        F=crandn(rng, K, N), G=crandn(rng, L, N), H=crandn(rng, K, L), a=a, alpha_T=alpha
    )


def rel_err(x, ref):
    return abs(x - ref) / max(abs(ref), 1e-300)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def acceptance_report():
    """Record one pass/fail line per acceptance criterion."""

    def report(number, title, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} -- {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
