import math
import threading

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vtwalk.errors import DimensionMismatch, DimensionTooLarge, NotMarked
from vtwalk.expansion import WeightScheme, expand
from vtwalk.tree_model import build_tree
from vtwalk.walk_operator import (
    apply_U,
    basis_state,
    build_walk,
    eigensystem,
    eta,
    p_eps_norm,
    phi_m,
)

from conftest import dense_walk_oracle, trees

ALL = list(WeightScheme)


def test_psi_root_star(star12):
    walk = build_walk(expand(star12))
    support, coef = walk.psi(0)
    expected = np.array([1.0, 1.0, math.sqrt(2)])
    expected /= np.linalg.norm(expected)
    assert support.tolist() == [0, 1, 2]
    assert np.allclose(coef, expected, atol=1e-15)
    assert walk.psi(3) is None  # marked


@settings(max_examples=30, deadline=None)
@given(trees(), st.sampled_from(ALL))
def test_matches_definition(tree, scheme):
    ex = expand(tree, scheme)
    walk = build_walk(ex)
    RA, RB = dense_walk_oracle(ex)
    ra, rb = walk.reflection_matrices()
    assert np.allclose(ra, RA, atol=1e-13)
    assert np.allclose(rb, RB, atol=1e-13)
    assert np.allclose(walk.matrix(), RB @ RA, atol=1e-13)


@settings(max_examples=20, deadline=None)
@given(trees(), st.sampled_from(ALL), st.integers(0, 2**32 - 1))
def test_unitary_and_involutions(tree, scheme, seed):
    walk = build_walk(expand(tree, scheme))
    rng = np.random.default_rng(seed)
    v = rng.normal(size=walk.dim) + 1j * rng.normal(size=walk.dim)
    assert abs(np.linalg.norm(apply_U(walk, v)) - np.linalg.norm(v)) <= 1e-12 * np.linalg.norm(v)
    assert np.linalg.norm(walk.apply_RA(walk.apply_RA(v)) - v) <= 1e-12 * np.linalg.norm(v)
    assert np.linalg.norm(walk.apply_RB(walk.apply_RB(v)) - v) <= 1e-12 * np.linalg.norm(v)


def test_psi_unit_norm_and_disjoint():
    tree = build_tree([(0, 2, False), (0, 3, False), (1, 1, True), (1, 2, False)])
    walk = build_walk(expand(tree))
    for rows in (walk.rows_a, walk.rows_b):
        norms = np.sqrt(np.asarray(rows.multiply(rows).sum(axis=1)).ravel())
        assert np.allclose(norms, 1.0, atol=1e-12)
        # each vertex in at most one support per class
        assert (np.asarray((rows != 0).sum(axis=0)).ravel() <= 1).all()


def test_single_edge_not_identity():
    walk = build_walk(expand(build_tree([(0, 1, False)])))
    U = walk.matrix()
    assert U.shape == (2, 2)
    assert not np.allclose(U, np.eye(2))
    # psi_r = (1,1)/sqrt2, leaf negated: R_A = [[0,-1],[-1,0]], R_B = diag(1,-1)
    assert np.allclose(U, np.diag([1, -1]) @ np.array([[0, -1], [-1, 0]]))


def test_marked_leaf_fixed_by_own_block(star12):
    ex = expand(star12)
    walk = build_walk(ex)
    m = ex.marked_vertices()[0]  # level 2, so it owns an identity block in R_A
    e = basis_state(ex.size, m)
    assert np.allclose(walk.apply_RA(e), e)


def test_phi_m_star(star12):
    ex = expand(star12)
    ph = phi_m(ex, 3)
    assert np.allclose(ph[[0, 2, 3]], [1, -1 / math.sqrt(2), 1 / math.sqrt(2)])
    assert ph[1] == 0
    assert np.vdot(ph, ph).real == pytest.approx(2.0)
    assert abs(ph[0]) / np.linalg.norm(ph) == pytest.approx(1 / math.sqrt(2))
    with pytest.raises(NotMarked):
        phi_m(ex, 1)


def test_phi_m_two_term():
    ex = expand(build_tree([(0, 1, True)]))
    ph = phi_m(ex, 1)
    assert np.allclose(ph, [1, -1])
    assert abs(ph[0]) / np.linalg.norm(ph) == pytest.approx(1 / math.sqrt(2), abs=1e-15)


def test_apply_U_on_phi_m_counts(star12):
    ex = expand(star12)
    walk = build_walk(ex)
    ph = phi_m(ex, 3)
    assert np.linalg.norm(apply_U(walk, ph) - ph) <= 1e-12
    assert walk.queries == 4


def test_apply_U_on_eta(star12_unmarked):
    ex = expand(star12_unmarked)
    walk = build_walk(ex)
    h = eta(ex)
    expected = h - 2 * basis_state(ex.size)
    assert np.linalg.norm(apply_U(walk, h) - expected) <= 1e-12


def test_zero_vector():
    walk = build_walk(expand(build_tree([(0, 2, False)])))
    assert not apply_U(walk, np.zeros(walk.dim)).any()


def test_dimension_mismatch():
    walk = build_walk(expand(build_tree([(0, 2, False)])))
    with pytest.raises(DimensionMismatch):
        apply_U(walk, np.zeros(walk.dim + 1))


def test_eta_norm_star(star12_unmarked):
    h = eta(expand(star12_unmarked))
    assert np.vdot(h, h).real == pytest.approx(6.0)


@settings(max_examples=30, deadline=None)
@given(trees(marked=False))
def test_eta_identities(tree):
    ex = expand(tree)
    walk = build_walk(ex)
    h = eta(ex)
    assert np.linalg.norm(walk.apply_RA(h) + h) <= 1e-10
    assert np.linalg.norm(walk.apply_RB(h) - (2 * basis_state(ex.size) - h)) <= 1e-10
    assert np.vdot(h, h).real == pytest.approx(1 + tree.depth * tree.total_work, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(trees(marked=True), st.sampled_from([WeightScheme.KNOWN_TIMES, WeightScheme.EXPONENTIAL_BLOCKS]))
def test_phi_m_eigenvector(tree, scheme):
    ex = expand(tree, scheme)
    walk = build_walk(ex)
    D = ex.source.depth
    for m in ex.marked_vertices():
        ph = phi_m(ex, m)
        assert np.linalg.norm(walk.apply_RA(ph) - ph) <= 1e-10
        assert np.linalg.norm(walk.apply_RB(ph) - ph) <= 1e-10
        assert np.vdot(ph, ph).real <= 2 * D + 1e-9
        assert abs(ph[0]) / np.linalg.norm(ph) >= 1 / math.sqrt(2) - 1e-12


def test_eigensystem_marked_star(star12):
    eigs = eigensystem(build_walk(expand(star12)))
    assert eigs.root_overlaps.sum() == pytest.approx(1.0, abs=1e-9)
    assert p_eps_norm(eigs, 1e-7) ** 2 >= 0.5 - 1e-9
    assert p_eps_norm(eigs, math.pi / 2) == pytest.approx(1.0, abs=1e-12)
    assert ((eigs.phases > -math.pi / 2) & (eigs.phases <= math.pi / 2)).all()


def test_eigensystem_unmarked_bound(star12_unmarked):
    eigs = eigensystem(build_walk(expand(star12_unmarked)))
    assert p_eps_norm(eigs, 0.1) <= 0.1 * math.sqrt(6)
    for eps in (0.01, 0.05, 0.1, 0.2, 0.5):
        assert p_eps_norm(eigs, eps) ** 2 <= eps**2 * (1 + 1 * 5) + 1e-9


@pytest.mark.parametrize("c", [0.25, 1.0, 3.0, 10.0])
def test_two_dim_jordan_angle(c):
    # single edge with child weight c: U = R_B R_A is a rotation by twice the
    # angle between psi_r-perp = (sqrt c, -1) and |r>
    ex = expand(build_tree([(0, 1, False)]))
    ex = ex.with_weights(np.array([1.0, c]))
    eigs = eigensystem(build_walk(ex))
    alpha = math.acos(math.sqrt(c) / math.sqrt(1 + c))
    assert np.allclose(np.sort(eigs.phases), [-alpha, alpha], atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(trees(), st.sampled_from(ALL))
def test_moments_cross_check(tree, scheme):
    ex = expand(tree, scheme)
    walk = build_walk(ex)
    eigs = eigensystem(walk)
    v = basis_state(ex.size)
    for j in range(1, 11):
        v = apply_U(walk, v)
        assert abs(v[0] - eigs.moment(j)) <= 1e-8
    assert walk.queries == 40


def test_query_counter_threads():
    walk = build_walk(expand(build_tree([(0, 3, False), (0, 2, False)])))
    v = basis_state(walk.dim)

    def work():
        for _ in range(50):
            walk.apply_U(v)

    threads = [threading.Thread(target=work) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert walk.queries == 8 * 50 * 4


def test_dense_cap(monkeypatch):
    ex = expand(build_tree([(0, 10, False)]))
    with pytest.raises(DimensionTooLarge):
        build_walk(ex, cap=5)
    walk = build_walk(ex, matrix_free=True, cap=5)
    with pytest.raises(DimensionTooLarge):
        eigensystem(walk)
    assert np.isfinite(apply_U(walk, basis_state(ex.size))).all()
    monkeypatch.setenv("VTWALK_DIM_CAP", "4")
    with pytest.raises(DimensionTooLarge):
        build_walk(ex)
