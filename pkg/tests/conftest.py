import numpy as np
import pytest

from spatialpd.game import C, D, pairwise_payoff


def brute_force_payoffs(grid: np.ndarray, b: float) -> np.ndarray:
    """Double loop over every cell and its four torus neighbours."""
    L = grid.shape[0]
    out = np.zeros((L, L))
    for r in range(L):
        for c in range(L):
            for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
                mine, theirs = grid[r, c], grid[(r + dr) % L, (c + dc) % L]
                out[r, c] += pairwise_payoff(C if mine else D, C if theirs else D, b)
    return out.reshape(-1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, repeated at the end of the session
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
