import numpy as np
import pytest

from veq.mdp import TabularMdp


def random_mdp(n_states=6, n_actions=3, gamma=0.9, seed=0):
    rng = np.random.default_rng(seed)
    transition = rng.dirichlet(np.ones(n_states), size=(n_actions, n_states))
    reward = rng.uniform(0.0, 1.0, size=(n_states, n_actions))
    return TabularMdp(reward, transition, gamma, name="random")


@pytest.fixture
def small_mdp():
    return random_mdp()


ACCEPTANCE = {}


def record_criterion(number, passed, detail):
    """Store a criterion outcome for the end-of-session summary."""
    line = f"{'PASS' if passed else 'FAIL'} criterion {number:>2}: {detail}"
    ACCEPTANCE[number] = line
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[number])
