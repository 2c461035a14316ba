"""Expanded trees: every transition of ``t_v`` steps unrolled into a path.

Vertex ``v`` of the computation tree becomes the path ``s(v,1) .. s(v,t_v)``
hanging below ``s(parent(v), t_parent)``.  Each expanded vertex gets a
positive weight; the weights fix the walk's diffusion vectors.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyTree, InvalidParams, UnknownVertex
from .tree_model import ComputationTree


class WeightScheme(enum.Enum):
    """How weights are laid along each unrolled path.

    KNOWN_TIMES: every vertex on v's path weighs t_v.
    EXPONENTIAL_BLOCKS: times padded to blocks 1, 2, 4, ..., each block of
        length 2^b weighing 2^b (padding + KNOWN_TIMES on the blocks).
    LINEAR_RAMP: the j-th vertex on a path weighs j.
    UNIT: every vertex weighs 1.
    """

    KNOWN_TIMES = "known"
    EXPONENTIAL_BLOCKS = "expblocks"
    LINEAR_RAMP = "linear"
    UNIT = "unit"

    @classmethod
    def parse(cls, value: "str | WeightScheme") -> "WeightScheme":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        for scheme in cls:
            if key in (scheme.value, scheme.name.lower()):
                return scheme
        raise InvalidParams(f"unknown weight scheme {value!r}; expected one of {[s.value for s in cls]}")


@dataclass(frozen=True)
class ExpandedVertex:
    id: int
    parent: int | None
    orig: int  # source vertex; 0 for the root
    step: int  # 1..t_orig; 0 for the root
    weight: float
    level: int
    marked: bool

    @property
    def is_root(self) -> bool:
        return self.parent is None


def block_count(t: int) -> int:
    """Smallest ``a`` with ``1 + 2 + ... + 2^a >= t`` (i.e. ``2^(a+1) - 1 >= t``)."""
    if t < 1:
        raise InvalidParams(f"time must be >= 1, got {t}")
    # 2^(a+1) - 1 >= t  <=>  2^(a+1) > t
    return t.bit_length() - 1


def block_times(t: int) -> list[int]:
    """Exponential search blocks ``1, 2, ..., 2^a`` covering ``t`` steps."""
    a = block_count(t)
    return [1 << b for b in range(a + 1)]


def pad_unknown(tree: ComputationTree) -> ComputationTree:
    """Replace each non-root vertex by its chain of exponential blocks.

    Only the last block of a chain inherits the marked flag; children of the
    original vertex hang below that last block.
    """
    parents, times, marked = [-1], [0], [bool(tree.marked[0])]
    last = [0] * (tree.n + 1)
    src_parents = tree.parents.tolist()
    src_times = tree.times.tolist()
    src_marked = tree.marked.tolist()
    for v in range(1, tree.n + 1):
        attach = last[src_parents[v]]
        blocks = block_times(src_times[v])
        for i, b in enumerate(blocks):
            parents.append(attach)
            times.append(b)
            marked.append(src_marked[v] and i == len(blocks) - 1)
            attach = len(parents) - 1
        last[v] = attach
    return ComputationTree(parents, times, marked)


class ExpandedTree:
    """Path-unrolled tree with weights, levels and marked flags.

    ``source`` is the tree actually unrolled: the padded tree under
    EXPONENTIAL_BLOCKS, the input tree otherwise.  Column arrays are indexed
    by expanded id; the root is id 0 and ids are topologically ordered.
    """

    def __init__(
        self,
        source: ComputationTree,
        scheme: WeightScheme,
        parents: np.ndarray,
        orig: np.ndarray,
        step: np.ndarray,
        weights: np.ndarray,
        levels: np.ndarray,
        marked: np.ndarray,
    ):
        self.source = source
        self.scheme = scheme
        self.parents = parents
        self.orig = orig
        self.step = step
        self.weights = weights
        self.levels = levels
        self.marked = marked
        for a in (parents, orig, step, weights, levels, marked):
            a.setflags(write=False)

    @property
    def size(self) -> int:
        return len(self.parents)

    def __len__(self) -> int:
        return self.size

    @property
    def depth(self) -> int:
        return int(self.levels.max())

    @property
    def source_depth(self) -> int:
        return self.source.depth

    @property
    def root_weight(self) -> float:
        return float(self.weights[0])

    @property
    def weight_sum(self) -> float:
        """Sum of all non-root weights."""
        return float(self.weights[1:].sum())

    def __repr__(self) -> str:
        return f"ExpandedTree(|E|={self.size}, scheme={self.scheme.value}, D_E={self.depth})"

    def vertex(self, x: int) -> ExpandedVertex:
        if not 0 <= x < self.size:
            raise UnknownVertex(x)
        parent = int(self.parents[x])
        return ExpandedVertex(
            id=int(x),
            parent=None if parent < 0 else parent,
            orig=int(self.orig[x]),
            step=int(self.step[x]),
            weight=float(self.weights[x]),
            level=int(self.levels[x]),
            marked=bool(self.marked[x]),
        )

    @property
    def vertices(self) -> list[ExpandedVertex]:
        return [self.vertex(x) for x in range(self.size)]

    def marked_vertices(self) -> list[int]:
        return [int(x) for x in np.nonzero(self.marked)[0]]

    def path(self, x: int) -> np.ndarray:
        """Expanded ids from the root down to ``x`` inclusive."""
        if not 0 <= x < self.size:
            raise UnknownVertex(x)
        out = [int(x)]
        parents = self.parents
        while out[-1] != 0:
            out.append(int(parents[out[-1]]))
        return np.array(out[::-1], dtype=np.int64)

    def with_weights(self, weights: np.ndarray) -> "ExpandedTree":
        """Copy with replaced weights (used for negative-control checks)."""
        weights = np.asarray(weights, dtype=float).copy()
        if weights.shape != self.weights.shape or np.any(weights <= 0):
            raise InvalidParams("replacement weights must be positive and match |E|")
        return ExpandedTree(
            self.source,
            self.scheme,
            self.parents.copy(),
            self.orig.copy(),
            self.step.copy(),
            weights,
            self.levels.copy(),
            self.marked.copy(),
        )

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme.value,
            "vertices": [
                {
                    "id": x.id,
                    "parent": x.parent,
                    "orig": x.orig,
                    "step": x.step,
                    "weight": x.weight,
                    "level": x.level,
                    "marked": x.marked,
                }
                for x in self.vertices
            ],
        }


def expand(tree: ComputationTree, scheme: "WeightScheme | str" = WeightScheme.KNOWN_TIMES) -> ExpandedTree:
    """Unroll ``tree`` into its expanded tree under ``scheme``.

    The root weighs ``1/D`` with ``D`` the depth of the unrolled source tree.
    """
    scheme = WeightScheme.parse(scheme)
    if tree.n == 0:
        raise EmptyTree("cannot expand a root-only tree")
    source = pad_unknown(tree) if scheme is WeightScheme.EXPONENTIAL_BLOCKS else tree

    times = source.times
    src_parents = source.parents
    nonroot = np.arange(1, source.n + 1)
    lengths = times[1:]
    size = 1 + int(lengths.sum())

    # first expanded id of every source vertex's path; root occupies id 0
    first = np.zeros(source.n + 1, dtype=np.int64)
    first[1:] = 1 + np.concatenate([[0], np.cumsum(lengths)[:-1]])
    last = first + times - 1
    last[0] = 0

    orig = np.zeros(size, dtype=np.int64)
    orig[1:] = np.repeat(nonroot, lengths)
    step = np.zeros(size, dtype=np.int64)
    ids = np.arange(size)
    step[1:] = ids[1:] - first[orig[1:]] + 1

    parents = ids - 1
    parents[0] = -1
    heads = np.nonzero(step == 1)[0]
    parents[heads] = last[src_parents[orig[heads]]]

    # weighted depth of each source vertex's path end
    end_level = np.zeros(source.n + 1, dtype=np.int64)
    tl = times.tolist()
    pl = src_parents.tolist()
    for v in range(1, source.n + 1):
        end_level[v] = end_level[pl[v]] + tl[v]
    levels = np.zeros(size, dtype=np.int64)
    levels[1:] = end_level[src_parents[orig[1:]]] + step[1:]

    if scheme in (WeightScheme.KNOWN_TIMES, WeightScheme.EXPONENTIAL_BLOCKS):
        weights = times[orig].astype(float)
    elif scheme is WeightScheme.LINEAR_RAMP:
        weights = step.astype(float)
    else:
        weights = np.ones(size)
    weights[0] = 1.0 / source.depth

    marked = np.zeros(size, dtype=bool)
    marked[1:] = source.marked[orig[1:]] & (step[1:] == times[orig[1:]])

    return ExpandedTree(source, scheme, parents, orig, step, weights, levels, marked)


def _check_leaf(expanded: ExpandedTree, leaf: int) -> np.ndarray:
    if not 1 <= leaf < expanded.size:
        raise UnknownVertex(leaf)
    return expanded.path(leaf)[1:]


def path_resistance(expanded: ExpandedTree, leaf: int) -> float:
    """Sum of ``1/w`` along the root-to-``leaf`` path, root term excluded."""
    path = _check_leaf(expanded, leaf)
    return float(np.sum(1.0 / expanded.weights[path]))


def total_path_weight(expanded: ExpandedTree, leaf: int) -> float:
    """Sum of weights along the root-to-``leaf`` path, root excluded."""
    path = _check_leaf(expanded, leaf)
    return float(np.sum(expanded.weights[path]))


def single_path(t: int, scheme: "WeightScheme | str") -> tuple[ExpandedTree, int]:
    """Expanded single-vertex tree of time ``t`` and the id of its path end."""
    tree = ComputationTree([-1, 0], [0, t], [False, False])
    ex = expand(tree, scheme)
    return ex, ex.size - 1


def weighing_row(t: int, scheme: "WeightScheme | str") -> dict:
    """Resistance/weight figures of merit for one path of length ``t``."""
    scheme = WeightScheme.parse(scheme)
    ex, leaf = single_path(t, scheme)
    R = path_resistance(ex, leaf)
    W = total_path_weight(ex, leaf)
    log2t = math.log2(t)
    lnt = math.log(t)
    return {
        "scheme": scheme.value,
        "t": t,
        "R": R,
        "W": W,
        "R/log2t": R / log2t if t > 1 else float("nan"),
        "R/lnt": R / lnt if t > 1 else float("nan"),
        "W/t2": W / (t * t),
    }
