"""Reductions of four search problems to computation trees, plus bound checks.

* variable time search: a star whose i-th leaf costs ``t_i`` steps;
* divide & conquer with OR-combining: a complete ``a``-ary tree whose
  level-``i`` vertices cost ``T_aux(n / b^i)``;
* bomb-query algorithms: a line whose i-th edge costs ``ceil(sqrt(d_i))``;
* Point-On-3-Lines: an exact brute-force checker and the ``r^2``-ary cost
  tree of the cutting-based recursion.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DuplicateLines, InvalidParams, InvalidSize
from .tree_model import ComputationTree

# --------------------------------------------------------------------------
# variable time search


@dataclass(frozen=True)
class VTSInstance:
    times: tuple[int, ...]
    solutions: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "times", tuple(int(t) for t in self.times))
        object.__setattr__(self, "solutions", tuple(int(x) for x in self.solutions))
        if not self.times:
            raise InvalidParams("VTS instance needs at least one item")
        if len(self.solutions) != len(self.times):
            raise InvalidParams("times and solutions must have the same length")
        if any(t < 1 for t in self.times):
            raise InvalidParams("item times must be >= 1")
        if any(x not in (0, 1) for x in self.solutions):
            raise InvalidParams("solutions must be bits")

    @property
    def n(self) -> int:
        return len(self.times)

    @property
    def T(self) -> int:
        return sum(t * t for t in self.times)

    @property
    def t_max(self) -> int:
        return max(self.times)


def vts_star(inst: VTSInstance) -> ComputationTree:
    n = inst.n
    return ComputationTree(
        [-1] + [0] * n,
        [0, *inst.times],
        [False, *(bool(x) for x in inst.solutions)],
    )


def vts_group_steps(inst: VTSInstance, k: int) -> VTSInstance:
    """Treat every ``k`` consecutive steps as one (identity-padded at the end)."""
    if k < 1:
        raise InvalidParams("group size must be >= 1")
    return VTSInstance(tuple(-(-t // k) for t in inst.times), inst.solutions)


def _log2_floor1(x: float) -> float:
    return max(1.0, math.log2(x)) if x > 0 else 1.0


def vts_query_bound(inst: VTSInstance, known_times: bool) -> float:
    """Predicted query count: ``sqrt(T)`` or ``sqrt(T log2 min(n, t_max))``.

    A degenerate logarithm (argument <= 2) is taken as 1.
    """
    if known_times:
        return math.sqrt(inst.T)
    return math.sqrt(inst.T * _log2_floor1(min(inst.n, inst.t_max)))


# --------------------------------------------------------------------------
# divide & conquer

_TAUX_NAMED: dict[str, Callable[[int], int]] = {
    "linear": lambda m: m,
    "quadratic": lambda m: m * m,
    "sqrt": lambda m: max(1, round(math.sqrt(m))),
    "unit": lambda m: 1,
}


def taux_function(spec: "str | Callable[[int], int] | dict | Sequence[int]") -> Callable[[int], int]:
    """Resolve a named, callable or tabulated ``T_aux``.

    Tables map subproblem size to cost, either as a dict or as a sequence
    indexed by size.
    """
    if callable(spec):
        return spec
    if isinstance(spec, str):
        try:
            return _TAUX_NAMED[spec]
        except KeyError:
            raise InvalidParams(f"unknown T_aux {spec!r}; named options: {sorted(_TAUX_NAMED)}") from None
    if isinstance(spec, dict):
        table = {int(k): int(v) for k, v in spec.items()}
        return lambda m: table[m]
    seq = [int(v) for v in spec]
    return lambda m: seq[m]


def exact_log(n: int, b: int) -> int | None:
    """``D`` with ``b**D == n``, or ``None``."""
    if n < 1:
        return None
    d = 0
    while n % b == 0 and n > 1:
        n //= b
        d += 1
    return d if n == 1 else None


@dataclass
class DnCSpec:
    a: int
    b: int
    n: int
    t_aux: "str | Callable[[int], int] | dict | Sequence[int]" = "linear"
    leaf_marks: Sequence[bool] | None = None
    _f: Callable[[int], int] = field(init=False, repr=False)

    def __post_init__(self):
        if self.a < 1 or self.b < 2:
            raise InvalidParams(f"need a >= 1 and b >= 2, got a={self.a}, b={self.b}")
        if exact_log(self.n, self.b) is None:
            raise InvalidSize(f"n = {self.n} is not a power of b = {self.b}")
        self._f = taux_function(self.t_aux)
        if self.leaf_marks is not None and len(self.leaf_marks) != self.a**self.depth:
            raise InvalidParams(f"expected {self.a ** self.depth} leaf marks, got {len(self.leaf_marks)}")

    @property
    def depth(self) -> int:
        return exact_log(self.n, self.b)

    def cost(self, m: int) -> int:
        return int(self._f(m))


def _complete_tree(branching: int, level_times: Sequence[int], leaf_marks: Sequence[bool] | None) -> ComputationTree:
    """Zero-time root over one vertex heading a complete ``branching``-ary tree.

    ``level_times[i]`` is the time of every vertex ``i`` levels below that
    head.  Vertices are numbered breadth-first.
    """
    parents, times = [-1, 0], [0, int(level_times[0])]
    frontier = [1]
    for t in level_times[1:]:
        nxt = []
        for u in frontier:
            for _ in range(branching):
                parents.append(u)
                times.append(int(t))
                nxt.append(len(parents) - 1)
        frontier = nxt
    marked = [False] * len(parents)
    if leaf_marks is not None:
        for v, mark in zip(frontier, leaf_marks):
            marked[v] = bool(mark)
    return ComputationTree(parents, times, marked)


def dnc_tree(spec: DnCSpec) -> ComputationTree:
    """Computation tree of an OR-combining divide & conquer.

    A zero-time root sits above the level-0 vertex, so the tree's total work
    is exactly ``sum_i a^i T_aux(n/b^i)^2``.
    """
    D = spec.depth
    level_times = [spec.cost(spec.n // spec.b**i) for i in range(D + 1)]
    return _complete_tree(spec.a, level_times, spec.leaf_marks)


def dnc_total_work(spec: DnCSpec) -> int:
    return sum(spec.a**i * spec.cost(spec.n // spec.b**i) ** 2 for i in range(spec.depth + 1))


def dnc_recurrence(spec: DnCSpec) -> float:
    """Unroll ``T_Q(m) = sqrt(a) T_Q(m/b) + T_aux(m)`` from ``T_Q(1) = T_aux(1)``."""
    value = float(spec.cost(1))
    m = 1
    root_a = math.sqrt(spec.a)
    while m < spec.n:
        m *= spec.b
        value = root_a * value + spec.cost(m)
    return value


# --------------------------------------------------------------------------
# bomb queries


def ceil_sqrt(d: int) -> int:
    r = math.isqrt(d)
    return r if r * r == d else r + 1


@dataclass(frozen=True)
class BombSpec:
    gaps: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "gaps", tuple(int(d) for d in self.gaps))
        if not self.gaps:
            raise InvalidParams("bomb spec needs at least one gap")
        if any(d < 1 for d in self.gaps):
            raise InvalidParams("gaps must be positive")

    @property
    def G(self) -> int:
        return len(self.gaps)

    @property
    def T(self) -> int:
        return sum(self.gaps)

    @property
    def times(self) -> tuple[int, ...]:
        return tuple(ceil_sqrt(d) for d in self.gaps)


def bomb_line_tree(spec: BombSpec) -> ComputationTree:
    times = spec.times
    G = len(times)
    return ComputationTree(
        list(range(-1, G)),
        [0, *times],
        [False] * G + [True],
    )


def bomb_bounds(spec: BombSpec) -> dict:
    """Sum of times, its Cauchy–Schwarz bound, the walk bound and target."""
    t = spec.times
    G = spec.G
    sq = sum(x * x for x in t)
    log_tmax = _log2_floor1(max(t))
    return {
        "sum_t": sum(t),
        "cauchy_schwarz": math.sqrt(sq * G),
        "walk_bound": math.sqrt(sq * G * log_tmax),
        "target": math.sqrt(spec.T * G * _log2_floor1(spec.T)),
    }


# --------------------------------------------------------------------------
# Point-On-3-Lines

Line = tuple[int, int, int]


def normalize_line(a: int, b: int, c: int) -> Line:
    """Divide ``ax + by = c`` by the gcd and make the first nonzero of (a, b) positive."""
    a, b, c = int(a), int(b), int(c)
    if a == 0 and b == 0:
        raise InvalidParams("line needs (a, b) != (0, 0)")
    g = math.gcd(math.gcd(a, b), c)
    a, b, c = a // g, b // g, c // g
    if a < 0 or (a == 0 and b < 0):
        a, b, c = -a, -b, -c
    return a, b, c


class LineSet:
    """Distinct normalised integer lines ``a x + b y = c``."""

    def __init__(self, lines: Sequence[Sequence[int]]):
        normed = [normalize_line(*ln) for ln in lines]
        if len(set(normed)) != len(normed):
            raise DuplicateLines("line set contains the same line twice")
        self.lines: tuple[Line, ...] = tuple(normed)

    def __len__(self) -> int:
        return len(self.lines)

    def __iter__(self):
        return iter(self.lines)

    @classmethod
    def parse(cls, text: str) -> "LineSet":
        """One ``a b c`` triple per line; ``#`` starts a comment."""
        lines = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            body = raw.split("#", 1)[0].strip()
            if not body:
                continue
            parts = body.split()
            if len(parts) != 3:
                raise InvalidParams(f"line {lineno}: expected 'a b c', got {raw!r}")
            try:
                lines.append(tuple(int(p) for p in parts))
            except ValueError:
                raise InvalidParams(f"line {lineno}: non-integer coefficient in {raw!r}") from None
        return cls(lines)

    def dumps(self) -> str:
        return "".join(f"{a} {b} {c}\n" for a, b, c in self.lines)


def concurrent(l1: Line, l2: Line, l3: Line) -> bool:
    """Exact test that three distinct lines pass through one point."""
    (a1, b1, c1), (a2, b2, c2), (a3, b3, c3) = l1, l2, l3
    det = a1 * (b2 * c3 - b3 * c2) - b1 * (a2 * c3 - a3 * c2) + c1 * (a2 * b3 - a3 * b2)
    if det != 0:
        return False
    # the three normals must span the plane, otherwise the lines are parallel
    return (a1 * b2 - a2 * b1) != 0 or (a1 * b3 - a3 * b1) != 0 or (a2 * b3 - a3 * b2) != 0


def p3l_bruteforce(lines: "LineSet | Sequence[Sequence[int]]") -> bool:
    """O(n^3) scan over all triples."""
    if not isinstance(lines, LineSet):
        lines = LineSet(lines)
    if len(lines) < 3:
        raise InvalidParams("need at least three lines")
    return any(concurrent(*tri) for tri in itertools.combinations(lines.lines, 3))


def p3l_cost_tree(n: int, r: int) -> ComputationTree:
    """Cost-model tree of the cutting recursion on ``n`` lines.

    An ``r^2``-ary tree: level ``i`` (0-based, below a zero-time root) has
    ``r^(2i)`` vertices of time ``ceil(n / r^i)``, down to depth
    ``log_r n``.  With ``n <= r`` there is no recursion: a single level of
    time ``n``.
    """
    if r < 2:
        raise InvalidParams("r must be >= 2")
    if n < 1:
        raise InvalidSize("n must be >= 1")
    D = p3l_depth(n, r)
    level_times = [-(-n // r**i) for i in range(D + 1)]
    return _complete_tree(r * r, level_times, None)


def p3l_depth(n: int, r: int) -> int:
    if n <= r:
        return 0
    D = exact_log(n, r)
    if D is None:
        raise InvalidSize(f"n = {n} is not a power of r = {r}")
    return D


def p3l_cost_summary(n: int, r: int, polylog_power: float = 0.5) -> dict:
    tree = p3l_cost_tree(n, r)
    D = p3l_depth(n, r)
    sqrt_t = math.sqrt(tree.total_work)
    logn = max(1.0, math.log2(n))
    return {
        "n": n,
        "r": r,
        "D": D,
        "T": tree.total_work,
        "sqrt_T": sqrt_t,
        "sqrt_T_over_n": sqrt_t / n,
        "ratio_polylog": sqrt_t / (n * logn**polylog_power),
    }


def random_line_set(rng: np.random.Generator, n: int, coef: int = 50) -> list[Line]:
    """``n`` distinct random lines with coefficients in ``[-coef, coef]``."""
    seen: set[Line] = set()
    out: list[Line] = []
    while len(out) < n:
        a, b, c = (int(x) for x in rng.integers(-coef, coef + 1, size=3))
        if a == 0 and b == 0:
            continue
        ln = normalize_line(a, b, c)
        if ln not in seen:
            seen.add(ln)
            out.append(ln)
    return out
