import itertools

import numpy as np
import pytest

from glr.kernels import martingale_constraints
from glr.scenario_tree import binomial, build_tree


@pytest.fixture
def up_down():
    """S_0 = 0 moving to +2 or -1 with equal odds; unique martingale weight 1/3 on up."""
    return binomial(2.0, -1.0)


@pytest.fixture
def fair_coin():
    """Symmetric +-1 move: the physical measure is already a martingale measure."""
    return binomial(1.0, -1.0)


@pytest.fixture
def arbitrage():
    return binomial(2.0, 1.0)


@pytest.fixture
def trinomial():
    return build_tree(1, [(0, None, 1.0, [0.0]), (1, 0, 1 / 3, [2.0]), (2, 0, 1 / 3, [0.0]), (3, 0, 1 / 3, [-1.0])])


def binomial_alpha(up: float, down: float, p: float) -> float:
    """Best ratio of a one-step +up / -down market: the better of long and short."""
    long = up * p / (down * (1 - p))
    return max(long, 1 / long)


def polytope_vertices(A_eq: np.ndarray, b_eq: np.ndarray, lo: np.ndarray, hi: np.ndarray, tol: float = 1e-9):
    """All vertices of ``{A_eq z = b_eq, lo <= z <= hi}`` by brute force over active bound sets."""
    m, n = A_eq.shape
    found = []
    for k in range(max(n - m, 0), n + 1):
        for fixed in itertools.combinations(range(n), k):
            free = [i for i in range(n) if i not in fixed]
            for choice in itertools.product(*[(lo[i], hi[i]) for i in fixed]):
                z = np.zeros(n)
                z[list(fixed)] = choice
                rhs = b_eq - A_eq[:, list(fixed)] @ np.array(choice) if fixed else b_eq.copy()
                if free:
                    sub = A_eq[:, free]
                    if np.linalg.matrix_rank(sub) < len(free):
                        continue
                    sol, *_ = np.linalg.lstsq(sub, rhs, rcond=None)
                    z[free] = sol
                if np.all(np.abs(A_eq @ z - b_eq) <= tol) and np.all(z >= lo - tol) and np.all(z <= hi + tol):
                    found.append(z)
    return found


def kernel_box_vertices(tree, lam: float):
    M = martingale_constraints(tree)
    n = M.shape[1]
    return polytope_vertices(M, np.zeros(M.shape[0]), np.ones(n), np.full(n, lam))


def martingale_measure_vertices(tree):
    M = martingale_constraints(tree)
    p = tree.leaf_probs
    n = M.shape[1]
    # weights w = Z * p are a probability vector; M @ Z = (G.T) @ w
    A = np.vstack([M / p, np.ones(n)])
    b = np.append(np.zeros(M.shape[0]), 1.0)
    return polytope_vertices(A, b, np.zeros(n), np.ones(n))


_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture
def acceptance_log(request):
    """Append ``(criterion, passed, detail)``; lines are echoed and summarized at the end of the run."""
    lines = request.config.stash[_ACCEPTANCE]

    def record(criterion: str, passed: bool, detail: str) -> None:
        line = f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}"
        lines.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
