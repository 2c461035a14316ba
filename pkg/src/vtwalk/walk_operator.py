"""The walk unitary ``U = R_B R_A`` on the expanded-tree vertex basis.

Each unmarked vertex ``x`` owns a diffusion vector ``psi_x`` supported on
``x`` and its children with coefficients proportional to the square roots of
their weights.  ``R_A`` reflects about the ``psi_x`` of even-level vertices,
``R_B`` about those of odd-level vertices and fixes the root.  Marked
vertices own identity blocks.

A reflection class is stored as a sparse matrix ``P`` whose rows are the
``psi_x`` of that class; since the rows have disjoint supports,
``R = I - 2 P^T P``.  That gives a matrix-free application for any size and
a dense matrix below the eigendecomposition cap.
"""

from __future__ import annotations

import os
import threading
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .errors import DimensionMismatch, DimensionTooLarge, NotMarked, NumericalFailure
from .expansion import ExpandedTree

DEFAULT_DIM_CAP = 4096
PHASE_TOL = 1e-9


def dim_cap() -> int:
    """Dense-eigendecomposition cap; ``VTWALK_DIM_CAP`` overrides the default."""
    value = os.environ.get("VTWALK_DIM_CAP")
    return int(value) if value else DEFAULT_DIM_CAP


def _reflection_rows(expanded: ExpandedTree, parity: int) -> sp.csr_matrix:
    size = expanded.size
    w = expanded.weights
    parents = expanded.parents
    levels = expanded.levels
    child_sum = np.bincount(parents[1:], weights=w[1:], minlength=size)
    norms = np.sqrt(w + child_sum)

    heads = np.nonzero((levels % 2 == parity) & ~expanded.marked)[0]
    head_row = np.full(size, -1, dtype=np.int64)
    head_row[heads] = np.arange(len(heads))

    rows, cols, vals = [], [], []
    # each head contributes its own coefficient ...
    rows.append(head_row[heads])
    cols.append(heads)
    vals.append(np.sqrt(w[heads]) / norms[heads])
    # ... and one per child; parents of children are never marked
    kids = np.nonzero(levels % 2 != parity)[0]
    kids = kids[kids != 0]
    kid_parent = parents[kids]
    rows.append(head_row[kid_parent])
    cols.append(kids)
    vals.append(np.sqrt(w[kids]) / norms[kid_parent])

    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    vals = np.concatenate(vals)
    return sp.csr_matrix((vals, (rows, cols)), shape=(len(heads), size))


class WalkOperator:
    """Reflections ``R_A``, ``R_B`` and the step ``U = R_B R_A``.

    ``queries`` counts oracle calls: two per reflection, so four per ``U``.
    The counter is lock-protected; everything else is read-only.
    """

    def __init__(self, expanded: ExpandedTree, cap: int | None = None):
        self.expanded = expanded
        self.cap = dim_cap() if cap is None else cap
        self.rows_a = _reflection_rows(expanded, 0)
        self.rows_b = _reflection_rows(expanded, 1)
        self._queries = 0
        self._lock = threading.Lock()
        self._dense: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self.expanded.size

    @property
    def queries(self) -> int:
        return self._queries

    def reset_queries(self) -> None:
        with self._lock:
            self._queries = 0

    def _charge(self, k: int) -> None:
        with self._lock:
            self._queries += k

    def psi(self, x: int) -> tuple[np.ndarray, np.ndarray] | None:
        """Support and coefficients of ``psi_x``; ``None`` when ``x`` is marked."""
        ex = self.expanded
        ex.vertex(x)
        if ex.marked[x]:
            return None
        rows = self.rows_a if ex.levels[x] % 2 == 0 else self.rows_b
        # rows are numbered in order of their head ids
        heads = np.nonzero((ex.levels % 2 == ex.levels[x] % 2) & ~ex.marked)[0]
        r = int(np.searchsorted(heads, x))
        row = rows.getrow(r)
        return row.indices.copy(), row.data.copy()

    def _check(self, state: np.ndarray) -> np.ndarray:
        state = np.asarray(state)
        if state.shape[0] != self.dim:
            raise DimensionMismatch(f"state has leading dimension {state.shape[0]}, walk has {self.dim}")
        return state

    @staticmethod
    def _reflect(rows: sp.csr_matrix, state: np.ndarray) -> np.ndarray:
        return state - 2.0 * (rows.T @ (rows @ state))

    def apply_RA(self, state: np.ndarray) -> np.ndarray:
        state = self._check(state)
        self._charge(2)
        return self._reflect(self.rows_a, state)

    def apply_RB(self, state: np.ndarray) -> np.ndarray:
        state = self._check(state)
        self._charge(2)
        return self._reflect(self.rows_b, state)

    def apply_U(self, state: np.ndarray) -> np.ndarray:
        """One walk step on ``state`` (leading axis = vertex basis).

        Extra trailing axes are treated as an attached register, so a call is
        a single application of ``U`` whatever the state's shape.
        """
        state = self._check(state)
        self._charge(4)
        return self._reflect(self.rows_b, self._reflect(self.rows_a, state))

    def _dense_reflection(self, rows: sp.csr_matrix) -> np.ndarray:
        g = (rows.T @ rows).toarray()
        return np.eye(self.dim) - 2.0 * g

    def reflection_matrices(self) -> tuple[np.ndarray, np.ndarray]:
        self._require_dense()
        return self._dense_reflection(self.rows_a), self._dense_reflection(self.rows_b)

    def matrix(self) -> np.ndarray:
        """Dense ``U`` (real orthogonal); cached."""
        if self._dense is None:
            ra, rb = self.reflection_matrices()
            self._dense = rb @ ra
            self._dense.setflags(write=False)
        return self._dense

    def _require_dense(self) -> None:
        if self.dim > self.cap:
            raise DimensionTooLarge(f"|E| = {self.dim} exceeds the dense cap {self.cap}")


def build_walk(expanded: ExpandedTree, matrix_free: bool = False, cap: int | None = None) -> WalkOperator:
    """Assemble the walk for ``expanded``.

    Without ``matrix_free`` the expanded tree must fit under the dense cap,
    since every spectral operation needs the dense matrix.
    """
    if expanded.size < 2:
        raise DimensionMismatch("walk needs at least two expanded vertices")
    walk = WalkOperator(expanded, cap)
    if not matrix_free:
        walk._require_dense()
    return walk


def apply_U(walk: WalkOperator, state: np.ndarray) -> np.ndarray:
    return walk.apply_U(state)


def basis_state(dim: int, x: int = 0) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[x] = 1.0
    return v


def phi_m(expanded: ExpandedTree, m: int) -> np.ndarray:
    """Unnormalised 1-eigenvector of ``U`` attached to the marked vertex ``m``.

    Supported on the root-to-``m`` path with amplitude ``(-1)^level / sqrt(w)``.
    """
    if not expanded.vertex(m).marked:
        raise NotMarked(f"expanded vertex {m} is not marked")
    path = expanded.path(m)
    v = np.zeros(expanded.size, dtype=complex)
    sign = np.where(expanded.levels[path] % 2 == 0, 1.0, -1.0)
    v[path] = sign / np.sqrt(expanded.weights[path])
    return v


def eta(expanded: ExpandedTree) -> np.ndarray:
    """``sum_x sqrt(w_x / w_r) |x>``: annihilated by the +1 projector of ``R_A``."""
    return np.sqrt(expanded.weights / expanded.root_weight).astype(complex)


@dataclass(frozen=True)
class EigenSystem:
    """Root-resolved spectrum of ``U``.

    ``phases`` are the distinct eigenphases (eigenvalue ``exp(2i theta)``,
    theta in (-pi/2, pi/2]) in ascending order and ``root_overlaps`` the
    matching ``|<psi_k|r>|^2`` summed over each eigenspace.
    """

    phases: np.ndarray
    root_overlaps: np.ndarray
    eigenvalues: np.ndarray

    def moment(self, j: int) -> complex:
        """``<r|U^j|r>`` reconstructed from the spectrum."""
        return complex(np.sum(self.root_overlaps * np.exp(2j * j * self.phases)))

    def rows(self) -> list[tuple[float, float]]:
        return [(float(p), float(m)) for p, m in zip(self.phases, self.root_overlaps)]


def fold_phase(eigenvalues: np.ndarray) -> np.ndarray:
    """``theta = arg(lambda)/2`` folded into (-pi/2, pi/2]."""
    theta = np.angle(eigenvalues) / 2.0
    theta[theta <= -np.pi / 2 + PHASE_TOL] = np.pi / 2
    return theta


def _aggregate(theta: np.ndarray, mass: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray]:
    order = np.argsort(theta, kind="stable")
    theta, mass = theta[order], mass[order]
    starts = np.concatenate([[True], np.diff(theta) > tol])
    group = np.cumsum(starts) - 1
    agg_mass = np.bincount(group, weights=mass)
    # representative phase: mass-weighted would bias ties; take the first
    agg_theta = theta[starts]
    return agg_theta, agg_mass


def eigensystem(walk: WalkOperator, tol: float = PHASE_TOL) -> EigenSystem:
    """Full spectrum of ``U`` from a complex Schur form.

    ``U`` is normal, so its Schur factor is diagonal and the Schur vectors are
    an orthonormal eigenbasis even inside degenerate eigenspaces.
    """
    u = walk.matrix()
    try:
        t, z = scipy.linalg.schur(u.astype(complex), output="complex")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalFailure(str(exc)) from exc
    lam = np.diag(t).copy()
    off = np.linalg.norm(t - np.diag(lam))
    if not np.isfinite(off) or off > 1e-8 * max(1.0, np.sqrt(walk.dim)):
        raise NumericalFailure(f"Schur factor is not diagonal (off-diagonal norm {off:.3g})")
    if np.max(np.abs(np.abs(lam) - 1.0)) > 1e-9:
        raise NumericalFailure("eigenvalues off the unit circle")
    mass = np.abs(z[0, :]) ** 2
    phases, overlaps = _aggregate(fold_phase(lam), mass, tol)
    if abs(overlaps.sum() - 1.0) > 1e-9:
        raise NumericalFailure(f"root overlaps sum to {overlaps.sum()!r}")
    return EigenSystem(phases, overlaps, lam)


def p_eps_norm(eigs: EigenSystem, eps: float) -> float:
    """Norm of the root state projected on eigenphases with ``|theta| <= eps``."""
    sel = np.abs(eigs.phases) <= eps
    return float(np.sqrt(np.sum(eigs.root_overlaps[sel])))
