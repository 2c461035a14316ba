import numpy as np
import pytest
from hypothesis import strategies as st

from vtwalk.experiments import random_tree
from vtwalk.tree_model import build_tree


@pytest.fixture
def star12():
    """Star with child times (1, 2), second child marked."""
    return build_tree([(0, 1, False), (0, 2, True)])


@pytest.fixture
def star12_unmarked():
    return build_tree([(0, 1, False), (0, 2, False)])


@st.composite
def trees(draw, n_max=20, t_max=6, marked=None):
    seed = draw(st.integers(0, 2**32 - 1))
    n = draw(st.integers(1, n_max))
    if marked is None:
        k = draw(st.integers(0, 2))
    else:
        k = draw(st.integers(1, 3)) if marked else 0
    return random_tree(np.random.default_rng(seed), n, t_max, marked=k)


def dense_walk_oracle(ex):
    """R_A, R_B built vertex by vertex from the diffusion-operator definition."""
    size = ex.size
    w = ex.weights
    children = [[] for _ in range(size)]
    for x in range(1, size):
        children[int(ex.parents[x])].append(x)
    RA = np.zeros((size, size))
    RB = np.zeros((size, size))
    RB[0, 0] = 1.0
    for x in range(size):
        block = [x] + children[x]
        if ex.marked[x]:
            D = np.eye(len(block))
        else:
            psi = np.sqrt(w[block])
            psi /= np.linalg.norm(psi)
            D = np.eye(len(block)) - 2 * np.outer(psi, psi)
        target = RA if ex.levels[x] % 2 == 0 else RB
        target[np.ix_(block, block)] = D
    return RA, RB
