import numpy as np
import pytest


def random_hermitian(n, seed):
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (g + g.conj().T) / 2


def random_complex(shape, seed):
    rng = np.random.default_rng(seed)
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def pt_by_loops(m, dx, dz):
    """Partial transpose on the first factor, written index by index."""
    out = np.zeros_like(m)
    for i in range(dx):
        for a in range(dz):
            for j in range(dx):
                for b in range(dz):
                    out[j * dz + a, i * dz + b] = m[i * dz + a, j * dz + b]
    return out


@pytest.fixture
def swap2():
    s = np.zeros((4, 4), dtype=complex)
    for i in range(2):
        for j in range(2):
            s[i * 2 + j, j * 2 + i] = 1
    return s


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Records one PASS/FAIL line per acceptance criterion."""

    def record(number, ok, detail, elapsed, budget):
        ok = bool(ok) and elapsed < budget
        status = "PASS" if ok else "FAIL"
        ACCEPTANCE_LINES.append(f"{status} criterion {number:>2}: {detail} ({elapsed:.2f}s, budget {budget:g}s)")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
