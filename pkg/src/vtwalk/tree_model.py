"""Computation trees: the problem instances searched by the walk.

A computation tree is a rooted tree in which computing vertex ``v`` from its
parent takes ``t_v`` transition steps.  The root takes no steps, every other
vertex at least one, and only leaves may be marked.  Vertex ids are dense and
topologically ordered (``parent < child``), which lets levels, depth and the
subtree sums be computed in a single forward pass.

The classical oracles of the model (degree, marking, transition time) are
plain lookups on this structure.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import CycleOrOrphan, MarkedInternal, TreeError, UnknownVertex, ZeroTime

MAX_TIME = 2**31 - 1


@dataclass(frozen=True)
class CompVertex:
    id: int
    parent: int | None
    time: int
    marked: bool


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class ComputationTree:
    """Immutable rooted tree with per-vertex transition times and marked leaves.

    Stored column-wise: ``parents[v]`` (``-1`` for the root), ``times[v]`` and
    ``marked[v]``.  Derived quantities: ``n`` (non-root count), ``depth``
    (max root-to-leaf edge count), ``total_work`` (sum of squared times) and
    ``t_max``.
    """

    __slots__ = (
        "parents",
        "times",
        "marked",
        "levels",
        "n",
        "depth",
        "total_work",
        "t_max",
        "_children",
    )

    def __init__(self, parents: Sequence[int], times: Sequence[int], marked: Sequence[bool]):
        parents = np.asarray(parents, dtype=np.int64).copy()
        times = np.asarray(times, dtype=np.int64).copy()
        marked = np.asarray(marked, dtype=bool).copy()
        size = len(parents)
        if size == 0 or len(times) != size or len(marked) != size:
            raise TreeError("tree needs a root and equally long parent/time/marked columns")
        if parents[0] != -1:
            raise CycleOrOrphan("vertex 0 must be the root (parent null)")
        ids = np.arange(size)
        bad = np.nonzero((parents[1:] < 0) | (parents[1:] >= ids[1:]))[0]
        if len(bad):
            v = int(bad[0]) + 1
            raise CycleOrOrphan(f"vertex {v} has parent {int(parents[v])}; parents must precede children")
        if times[0] != 0:
            raise TreeError("root time must be 0")
        zero = np.nonzero(times[1:] <= 0)[0]
        if len(zero):
            raise ZeroTime(f"vertex {int(zero[0]) + 1} has time {int(times[zero[0] + 1])}; non-root times must be >= 1")
        if times.max() > MAX_TIME:
            raise TreeError(f"times must fit in 32 bits (max {MAX_TIME})")

        degree = np.bincount(parents[1:], minlength=size) if size > 1 else np.zeros(1, dtype=np.int64)
        internal_marked = np.nonzero(marked & (degree > 0))[0]
        if len(internal_marked):
            raise MarkedInternal(f"vertex {int(internal_marked[0])} is marked but has children")

        levels = np.zeros(size, dtype=np.int64)
        for v in range(1, size):
            levels[v] = levels[parents[v]] + 1

        order = np.argsort(parents[1:], kind="stable") + 1
        starts = np.concatenate([[0], np.cumsum(degree)])
        children = tuple(
            tuple(int(c) for c in order[starts[u] : starts[u + 1]]) for u in range(size)
        )

        self.parents = _readonly(parents)
        self.times = _readonly(times)
        self.marked = _readonly(marked)
        self.levels = _readonly(levels)
        self._children = children
        self.n = size - 1
        self.depth = int(levels.max())
        # Python ints: no overflow however large the times get.
        self.total_work = sum(int(t) * int(t) for t in times.tolist())
        self.t_max = int(times.max())

    def __len__(self) -> int:
        return self.n + 1

    def __repr__(self) -> str:
        return (
            f"ComputationTree(n={self.n}, D={self.depth}, T={self.total_work}, "
            f"t_max={self.t_max}, marked={int(self.marked.sum())})"
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ComputationTree):
            return NotImplemented
        return (
            np.array_equal(self.parents, other.parents)
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.marked, other.marked)
        )

    def _check(self, v: int) -> int:
        if not 0 <= v <= self.n:
            raise UnknownVertex(v)
        return int(v)

    def vertex(self, v: int) -> CompVertex:
        v = self._check(v)
        parent = int(self.parents[v])
        return CompVertex(v, None if parent < 0 else parent, int(self.times[v]), bool(self.marked[v]))

    @property
    def vertices(self) -> list[CompVertex]:
        return [self.vertex(v) for v in range(self.n + 1)]

    def children(self, v: int) -> tuple[int, ...]:
        return self._children[self._check(v)]

    def leaves(self) -> list[int]:
        return [v for v in range(self.n + 1) if not self._children[v]]

    def marked_vertices(self) -> list[int]:
        return [int(v) for v in np.nonzero(self.marked)[0]]

    def path_to(self, v: int) -> list[int]:
        """Vertex ids from the root down to ``v`` inclusive."""
        v = self._check(v)
        path = [v]
        while path[-1] != 0:
            path.append(int(self.parents[path[-1]]))
        return path[::-1]

    def to_dict(self) -> dict:
        return {
            "vertices": [
                {"id": x.id, "parent": x.parent, "t": x.time, "marked": x.marked}
                for x in self.vertices
            ]
        }

    def to_json(self, indent: int | None = None) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    @classmethod
    def from_dict(cls, data: dict) -> "ComputationTree":
        try:
            records = data["vertices"]
        except (KeyError, TypeError) as exc:
            raise TreeError("expected an object with a 'vertices' list") from exc
        parents, times, marked = [], [], []
        for i, rec in enumerate(records):
            if rec.get("id") != i:
                raise TreeError(f"vertex ids must be ascending from 0; got {rec.get('id')!r} at position {i}")
            parent = rec.get("parent")
            if (parent is None) != (i == 0):
                raise CycleOrOrphan(f"vertex {i}: only the root has a null parent")
            parents.append(-1 if parent is None else int(parent))
            times.append(int(rec.get("t", 0)))
            marked.append(bool(rec.get("marked", False)))
        return cls(parents, times, marked)

    @classmethod
    def from_json(cls, text: str) -> "ComputationTree":
        return cls.from_dict(json.loads(text))


def build_tree(
    edges: Iterable[tuple[int, int, bool]], root_marked: bool = False
) -> ComputationTree:
    """Build a tree from ``(parent, time, marked)`` triples.

    The i-th triple (0-based) defines vertex ``i + 1``; parents must refer to
    earlier vertices.  ``root_marked`` is only legal for the root-only tree.
    """
    parents, times, marked = [-1], [0], [bool(root_marked)]
    for parent, time, mark in edges:
        parents.append(int(parent))
        times.append(int(time))
        marked.append(bool(mark))
    return ComputationTree(parents, times, marked)


def degree(tree: ComputationTree, v: int) -> int:
    return len(tree.children(v))


def brute_force_has_marked(tree: ComputationTree) -> bool:
    """Depth-first scan from the root for any marked vertex."""
    stack = [0]
    while stack:
        v = stack.pop()
        if tree.marked[v]:
            return True
        stack.extend(tree.children(v))
    return False


def classical_cost(tree: ComputationTree) -> int:
    return int(sum(int(t) for t in tree.times.tolist()))
