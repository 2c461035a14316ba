"""Seeded instance generation, scaling sweeps and the invariant suites.

Random trees use uniform attachment (vertex ``i`` picks its parent uniformly
among ``0..i-1``) and transition times drawn from a geometric distribution
with success probability ``GEOMETRIC_P`` conditioned on ``t <= t_max``.
"""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from . import applications as apps
from .detection import detect, plan_precision, qpe_accept_prob, statevector_qpe
from .errors import InvalidParams, VTWalkError
from .expansion import WeightScheme, expand, weighing_row
from .tree_model import ComputationTree, brute_force_has_marked
from .walk_operator import basis_state, build_walk, eigensystem, eta, p_eps_norm, phi_m

GEOMETRIC_P = 0.35
FAMILIES = ("star", "random_tree", "dnc", "bomb", "p3l_cost")
MARK_POLICIES = ("none", "one", "random")

CSV_COLUMNS = (
    "instance_id",
    "family",
    "size",
    "n",
    "D",
    "T",
    "t_max",
    "scheme",
    "marked",
    "verdict",
    "accept_prob",
    "queries",
    "predicted_bound",
    "wall_time",
    "error",
)


# --------------------------------------------------------------------------
# generators


def geometric_times(rng: np.random.Generator, count: int, t_max: int, p: float = GEOMETRIC_P) -> np.ndarray:
    ts = np.arange(1, t_max + 1)
    pmf = p * (1 - p) ** (ts - 1)
    return rng.choice(ts, size=count, p=pmf / pmf.sum())


def random_tree(
    rng: np.random.Generator,
    n: int,
    t_max: int,
    marked: int = 0,
) -> ComputationTree:
    """Uniform-attachment tree on ``n`` non-root vertices; ``marked`` leaves marked."""
    if n < 1 or t_max < 1:
        raise InvalidParams("random tree needs n >= 1 and t_max >= 1")
    parents = [-1] + [int(rng.integers(0, i)) for i in range(1, n + 1)]
    times = [0] + [int(t) for t in geometric_times(rng, n, t_max)]
    is_parent = set(parents[1:])
    leaves = [v for v in range(1, n + 1) if v not in is_parent]
    flags = [False] * (n + 1)
    if marked:
        for v in rng.choice(leaves, size=min(marked, len(leaves)), replace=False):
            flags[int(v)] = True
    return ComputationTree(parents, times, flags)


def _marks_for(rng: np.random.Generator, policy: str) -> int:
    if policy == "none":
        return 0
    if policy == "one":
        return 1
    if policy == "random":
        return int(rng.integers(0, 2))
    raise InvalidParams(f"unknown mark policy {policy!r}")


def _mark_one(rng: np.random.Generator, tree: ComputationTree, k: int) -> ComputationTree:
    if not k:
        return tree
    leaves = tree.leaves()
    flags = np.zeros(len(tree), dtype=bool)
    flags[int(rng.choice(leaves))] = True
    return ComputationTree(tree.parents, tree.times, flags)


@dataclass
class SweepConfig:
    family: str
    grid: Sequence[int]
    scheme: WeightScheme = WeightScheme.KNOWN_TIMES
    seed: int = 0
    reps: int = 15
    t_max: int = 4
    marked: str = "random"
    per_size: int = 1
    a: int = 2
    b: int = 2
    taux: str = "linear"
    r: int = 2
    matrix_free: bool = False
    timing: bool = False
    workers: int = 1
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidParams(f"unknown family {self.family!r}; choose from {FAMILIES}")
        self.scheme = WeightScheme.parse(self.scheme)
        if self.marked not in MARK_POLICIES:
            raise InvalidParams(f"unknown mark policy {self.marked!r}")


def make_instance(cfg: SweepConfig, size: int, rng: np.random.Generator) -> tuple[ComputationTree, float | None]:
    """Tree for one sweep point and its family-specific predicted bound (or None)."""
    k = _marks_for(rng, cfg.marked)
    if cfg.family == "star":
        times = (cfg.t_max,) * size
        sol = [0] * size
        if k:
            sol[int(rng.integers(0, size))] = 1
        return apps.vts_star(apps.VTSInstance(times, sol)), None
    if cfg.family == "random_tree":
        return random_tree(rng, size, cfg.t_max, marked=k), None
    if cfg.family == "dnc":
        spec = apps.DnCSpec(cfg.a, cfg.b, size, cfg.taux)
        tree = _mark_one(rng, apps.dnc_tree(spec), k)
        return tree, apps.dnc_recurrence(spec) * math.sqrt(max(1.0, math.log2(size)))
    if cfg.family == "bomb":
        gaps = [int(d) for d in rng.integers(1, cfg.t_max**2 + 1, size=size)]
        spec = apps.BombSpec(gaps)
        return apps.bomb_line_tree(spec), apps.bomb_bounds(spec)["walk_bound"]
    tree = apps.p3l_cost_tree(size, cfg.r)
    return _mark_one(rng, tree, k), float(size)


def scaling_bound(tree: ComputationTree, scheme: WeightScheme) -> float:
    """``sqrt(T D)`` for known times, times ``sqrt(log2 t_max)`` otherwise."""
    base = math.sqrt(tree.total_work * tree.depth)
    if scheme is WeightScheme.KNOWN_TIMES:
        return base
    return base * math.sqrt(max(1.0, math.log2(max(tree.t_max, 1))))


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _run_point(args) -> dict:
    cfg, idx, size, seed_seq = args
    rng = np.random.default_rng(seed_seq)
    row = {c: None for c in CSV_COLUMNS}
    row.update(instance_id=idx, family=cfg.family, size=size, scheme=cfg.scheme.value)
    start = time.perf_counter()
    try:
        tree, fam_bound = make_instance(cfg, size, rng)
        row.update(n=tree.n, D=tree.depth, T=tree.total_work, t_max=tree.t_max, marked=brute_force_has_marked(tree))
        row["predicted_bound"] = fam_bound if fam_bound is not None else scaling_bound(tree, cfg.scheme)
        rep = detect(tree, cfg.scheme, reps=cfg.reps, matrix_free=cfg.matrix_free)
        row.update(verdict=rep.verdict, accept_prob=rep.accept_prob_single, queries=rep.queries)
    except VTWalkError as exc:
        row["error"] = type(exc).__name__
    if cfg.timing:
        row["wall_time"] = round(time.perf_counter() - start, 6)
    return row


def run_sweep(cfg: SweepConfig) -> list[dict]:
    """Rows in deterministic instance order; per-instance seeds spawned from ``cfg.seed``."""
    points = [(size, j) for size in cfg.grid for j in range(cfg.per_size)]
    seeds = np.random.SeedSequence(cfg.seed).spawn(len(points))
    jobs = [(cfg, i, size, seeds[i]) for i, (size, _) in enumerate(points)]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            return list(pool.map(_run_point, jobs))
    return [_run_point(j) for j in jobs]


def loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope of ``log2 y`` against ``log2 x``."""
    lx = np.log2(np.asarray(x, dtype=float))
    ly = np.log2(np.asarray(y, dtype=float))
    slope, _ = np.polyfit(lx, ly, 1)
    return float(slope)


def sweep_slope(rows: Iterable[dict]) -> tuple[float | None, int]:
    ok = [r for r in rows if not r["error"] and r["queries"]]
    xs = [r["T"] * r["D"] for r in ok]
    if len(set(xs)) < 2:
        return None, len(ok)
    return loglog_slope(xs, [r["queries"] for r in ok]), len(ok)


def write_csv(rows: Sequence[dict], out: io.TextIOBase, summary: bool = True) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
    if summary and rows:
        slope, count = sweep_slope(rows)
        if slope is None:
            out.write(f"# loglog_slope(queries vs T*D): n/a over {count} points\n")
        else:
            out.write(f"# loglog_slope(queries vs T*D): {slope:.6f} over {count} points\n")


WEIGHT_COLUMNS = ("scheme", "t", "R", "W", "R/log2t", "R/lnt", "W/t2")


def weights_table(ts: Sequence[int], schemes: Sequence[WeightScheme] | None = None) -> list[dict]:
    schemes = list(WeightScheme) if schemes is None else schemes
    return [weighing_row(int(t), s) for s in schemes for t in ts]


def write_weights_csv(rows: Sequence[dict], out: io.TextIOBase) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(WEIGHT_COLUMNS)
    for row in rows:
        writer.writerow(["" if isinstance(row[c], float) and math.isnan(row[c]) else _fmt(row[c]) for c in WEIGHT_COLUMNS])


# --------------------------------------------------------------------------
# verification suites


@dataclass
class Check:
    name: str
    measured: float
    bound: float
    passed: bool
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f" ({self.detail})" if self.detail else ""
        return f"[{status}] {self.name}: measured={self.measured:.6g} bound={self.bound:.6g}{extra}"


def _le(name: str, measured: float, bound: float, detail: str = "") -> Check:
    return Check(name, float(measured), float(bound), bool(measured <= bound), detail)


def _ge(name: str, measured: float, bound: float, detail: str = "") -> Check:
    return Check(name, float(measured), float(bound), bool(measured >= bound), detail)


def suite_trees(seed: int, count: int, marked: bool, n_max: int = 25, t_max: int = 6) -> list[ComputationTree]:
    rng = np.random.default_rng(seed)
    trees = []
    for _ in range(count):
        n = int(rng.integers(2, n_max + 1))
        k = int(rng.integers(1, 4)) if marked else 0
        trees.append(random_tree(rng, n, t_max, marked=k))
    return trees


def _corrupt(ex, rng: np.random.Generator):
    w = np.array(ex.weights)
    targets = ex.marked_vertices() or [ex.size - 1]
    # a vertex just above a marked leaf (or the last vertex) gets 1.5x weight
    x = int(ex.parents[targets[0]]) or int(targets[0])
    w[x] *= 1.5
    return ex.with_weights(w)


def suite_eigenvector(seed: int = 1, count: int = 20, corrupt: bool = False) -> list[Check]:
    """phi_m is fixed by both reflections; its root overlap and norm obey the bounds."""
    rng = np.random.default_rng(seed + 10_000)
    worst_a = worst_b = worst_norm = 0.0
    worst_overlap = 1.0
    for scheme in (WeightScheme.KNOWN_TIMES, WeightScheme.EXPONENTIAL_BLOCKS):
        for tree in suite_trees(seed, count, marked=True):
            ex = expand(tree, scheme)
            walk = build_walk(_corrupt(ex, rng) if corrupt else ex)
            D = ex.source.depth
            for m in ex.marked_vertices():
                ph = phi_m(ex, m)
                worst_a = max(worst_a, np.linalg.norm(walk.apply_RA(ph) - ph))
                worst_b = max(worst_b, np.linalg.norm(walk.apply_RB(ph) - ph))
                nrm2 = float(np.vdot(ph, ph).real)
                worst_norm = max(worst_norm, nrm2 - 2 * D)
                worst_overlap = min(worst_overlap, abs(ph[0]) / math.sqrt(nrm2))
    return [
        _le("eigenvector: max ||R_A phi_m - phi_m||", worst_a, 1e-10, f"{count} trees"),
        _le("eigenvector: max ||R_B phi_m - phi_m||", worst_b, 1e-10, f"{count} trees"),
        _ge("overlap: min |<r|phi_m>|/||phi_m||", worst_overlap, 1 / math.sqrt(2) - 1e-12),
        _le("norm: max ||phi_m||^2 - 2D", worst_norm, 1e-9),
    ]


def suite_esgl(seed: int = 2, count: int = 20, eps_grid=(0.01, 0.05, 0.1, 0.2), corrupt: bool = False) -> list[Check]:
    """Unmarked trees: eta is negated by R_A, mapped to 2|r>-eta by R_B, and bounds P_eps|r>."""
    rng = np.random.default_rng(seed + 10_000)
    worst_a = worst_b = 0.0
    worst_gap = -np.inf
    for tree in suite_trees(seed, count, marked=False):
        ex = expand(tree, WeightScheme.KNOWN_TIMES)
        walk = build_walk(_corrupt(ex, rng) if corrupt else ex)
        h = eta(ex)
        r = basis_state(ex.size)
        worst_a = max(worst_a, np.linalg.norm(walk.apply_RA(h) + h))
        worst_b = max(worst_b, np.linalg.norm(walk.apply_RB(h) - (2 * r - h)))
        eigs = eigensystem(walk)
        bound_scale = math.sqrt(1 + tree.depth * tree.total_work)
        for eps in eps_grid:
            worst_gap = max(worst_gap, p_eps_norm(eigs, eps) - eps * bound_scale)
    return [
        _le("esgl: max ||R_A eta + eta||", worst_a, 1e-10, f"{count} trees"),
        _le("esgl: max ||R_B eta - (2|r> - eta)||", worst_b, 1e-10),
        _le("esgl: max p_eps_norm - eps*sqrt(1+DT)", worst_gap, 1e-9, f"eps in {list(eps_grid)}"),
    ]


def detection_instances(seed: int = 3, count: int = 50) -> list[tuple[ComputationTree, WeightScheme]]:
    """Alternating marked/unmarked random trees, alternating schemes."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        n = int(rng.integers(2, 26))
        tree = random_tree(rng, n, 6, marked=int(i % 2 == 0) * int(rng.integers(1, 3)))
        scheme = WeightScheme.KNOWN_TIMES if (i // 2) % 2 == 0 else WeightScheme.EXPONENTIAL_BLOCKS
        out.append((tree, scheme))
    return out


def suite_detection(seed: int = 3, count: int = 50) -> list[Check]:
    marked_min, unmarked_max, disagreements = 1.0, 0.0, 0
    for tree, scheme in detection_instances(seed, count):
        rep = detect(tree, scheme)
        truth = brute_force_has_marked(tree)
        if truth:
            marked_min = min(marked_min, rep.accept_prob_single)
        else:
            unmarked_max = max(unmarked_max, rep.accept_prob_single)
        disagreements += rep.verdict != truth
    checks = [
        _ge("detection: min accept prob (marked)", marked_min, 0.5 - 1e-9, f"{count} instances"),
        _le("detection: max accept prob (unmarked)", unmarked_max, 0.25 + 1e-9),
        _le("detection: verdict disagreements", disagreements, 0),
    ]

    worst = 0.0
    rng = np.random.default_rng(seed + 1)
    for i in range(10):
        tree = random_tree(rng, int(rng.integers(1, 6)), 3, marked=i % 2)
        ex = expand(tree)
        walk = build_walk(ex)
        M = 1 << int(rng.integers(0, 5))
        while M * ex.size > 2**16:
            M //= 2
        worst = max(worst, abs(statevector_qpe(walk, M) - qpe_accept_prob(eigensystem(walk), M)))
    checks.append(_le("qpe oracle: max |statevector - spectral|", worst, 1e-8, "10 instances"))

    slope = star_query_slope()
    checks.append(_le("scaling: |slope - 0.5| (star, T*D = 2^6..2^12)", abs(slope - 0.5), 0.05, f"slope={slope:.4f}"))
    c, factor = padded_overhead()
    checks.append(_le("unknown times: overhead deviation from c*sqrt(log2 t_max)", factor, 2.0, f"c={c:.3f}"))
    return checks


def star_instance(TD_log2: int, marked: bool = True) -> ComputationTree:
    """Star of ``2^(TD_log2 - 4)`` children of time 4, so ``T*D = 2^TD_log2``."""
    n = 1 << (TD_log2 - 4)
    sol = [0] * n
    if marked:
        sol[-1] = 1
    return apps.vts_star(apps.VTSInstance((4,) * n, sol))


def star_query_slope(grid=(6, 8, 10, 12)) -> float:
    xs, ys = [], []
    for g in grid:
        tree = star_instance(g)
        rep = detect(tree, WeightScheme.KNOWN_TIMES)
        xs.append(tree.total_work * tree.depth)
        ys.append(rep.queries)
    return loglog_slope(xs, ys)


def padded_overhead(t_grid=(4, 16, 64, 256)) -> tuple[float, float]:
    """Fit ``ratio = c sqrt(log2 t_max)`` over single-leaf stars.

    ``ratio`` is padded/known-times detection queries.  Returns the
    least-squares ``c`` and the largest factor by which any point deviates
    from the fit; power-of-two rounding of ``M`` alone can account for 2.
    """
    ratios, logs = [], []
    for t in t_grid:
        tree = apps.vts_star(apps.VTSInstance((t,), (1,)))
        known = detect(tree, WeightScheme.KNOWN_TIMES).queries
        padded = detect(tree, WeightScheme.EXPONENTIAL_BLOCKS).queries
        ratios.append(padded / known)
        logs.append(math.sqrt(math.log2(t)))
    ratios = np.array(ratios)
    logs = np.array(logs)
    c = float(np.dot(ratios, logs) / np.dot(logs, logs))
    fit = c * logs
    factor = float(np.max(np.maximum(ratios / fit, fit / ratios)))
    return c, factor


def suite_applications(seed: int = 4) -> list[Check]:
    checks = []
    t = 2**16
    exp = weighing_row(t, WeightScheme.EXPONENTIAL_BLOCKS)
    lin = weighing_row(t, WeightScheme.LINEAR_RAMP)
    unit = weighing_row(t, WeightScheme.UNIT)
    checks.append(Check("weights: expblocks W/t^2 in [1.30, 1.34]", exp["W/t2"], 1.34, 1.30 <= exp["W/t2"] <= 1.34))
    checks.append(Check("weights: expblocks R/log2 t in [0.9, 1.2]", exp["R/log2t"], 1.2, 0.9 <= exp["R/log2t"] <= 1.2))
    checks.append(Check("weights: linear W/(t^2/2) in [1.00, 1.01]", 2 * lin["W/t2"], 1.01, 1.0 <= 2 * lin["W/t2"] <= 1.01))
    checks.append(Check("weights: linear R/ln t in [1.0, 1.1]", lin["R/lnt"], 1.1, 1.0 <= lin["R/lnt"] <= 1.1))
    checks.append(Check("weights: unit R = W = t", abs(unit["R"] - t) + abs(unit["W"] - t), 0.0, unit["R"] == unit["W"] == t))

    worst = -np.inf
    for a in (1, 2, 3):
        for k in range(0, 11):
            for taux in ("linear", "quadratic", "sqrt"):
                spec = apps.DnCSpec(a, 2, 2**k, taux)
                worst = max(worst, math.sqrt(apps.dnc_total_work(spec)) - apps.dnc_recurrence(spec))
    checks.append(_le("dnc: max sqrt(T) - T_Q(n)", worst, 0.0, "a in 1..3, n <= 2^10"))

    rng = np.random.default_rng(seed)
    worst_cs = -np.inf
    for _ in range(100):
        spec = apps.BombSpec(rng.integers(1, 200, size=int(rng.integers(1, 20))))
        b = apps.bomb_bounds(spec)
        worst_cs = max(worst_cs, b["sum_t"] - b["cauchy_schwarz"])
    checks.append(_le("bomb: max sum t - sqrt(sum t^2 G)", worst_cs, 1e-12, "100 gap vectors"))

    wrong = 0
    for i in range(200):
        lines, planted = p3l_planted(rng, int(rng.integers(3, 41)), positive=i % 2 == 0)
        wrong += apps.p3l_bruteforce(lines) != planted
    checks.append(_le("p3l: brute-force errors on planted instances", wrong, 0, "100 positive + 100 negative"))

    worst_band = 0.0
    for k in range(0, 9):
        s = apps.p3l_cost_summary(2**k, 2)
        ratio = s["sqrt_T_over_n"] / math.sqrt(s["D"] + 1)
        worst_band = max(worst_band, abs(ratio - 1.0))
    checks.append(_le("p3l cost: max |sqrt(T)/n / sqrt(D+1) - 1|", worst_band, 0.2, "n = 2^k, k <= 8"))
    return checks


def has_triple_point(lines: Sequence[apps.Line]) -> bool:
    """Independent check: some pairwise intersection point is shared by 3 lines."""
    from fractions import Fraction

    on_point: dict[tuple[Fraction, Fraction], set[int]] = {}
    for i in range(len(lines)):
        a1, b1, c1 = lines[i]
        for j in range(i + 1, len(lines)):
            a2, b2, c2 = lines[j]
            det = a1 * b2 - a2 * b1
            if det == 0:
                continue
            pt = (Fraction(c1 * b2 - c2 * b1, det), Fraction(a1 * c2 - a2 * c1, det))
            members = on_point.setdefault(pt, set())
            members.update((i, j))
            if len(members) >= 3:
                return True
    return False


def p3l_planted(rng: np.random.Generator, n: int, positive: bool, coef: int = 30) -> tuple[list[apps.Line], bool]:
    """Random line set with a planted concurrent triple, or one in general position.

    Negative instances are resampled until the pairwise-intersection checker
    finds no triple point.
    """
    n = max(n, 3)
    while True:
        lines = apps.random_line_set(rng, n if not positive else n - 3, coef)
        if positive:
            px, py = (int(v) for v in rng.integers(-coef, coef + 1, size=2))
            extra: list[apps.Line] = []
            while len(extra) < 3:
                a, b = (int(v) for v in rng.integers(-coef, coef + 1, size=2))
                if a == 0 and b == 0:
                    continue
                ln = apps.normalize_line(a, b, a * px + b * py)
                if ln in extra or ln in lines:
                    continue
                extra.append(ln)
            lines = lines + extra
            order = rng.permutation(len(lines))
            return [lines[i] for i in order], True
        if not has_triple_point(lines):
            return lines, False


SUITES: dict[str, Callable[..., list[Check]]] = {
    "eigenvector": suite_eigenvector,
    "esgl": suite_esgl,
    "detection": suite_detection,
    "applications": suite_applications,
}


def run_suite(name: str, corrupt: bool = False) -> list[Check]:
    if name == "all":
        names = list(SUITES)
    elif name in SUITES:
        names = [name]
    else:
        raise InvalidParams(f"unknown suite {name!r}; choose from {[*SUITES, 'all']}")
    checks: list[Check] = []
    for n in names:
        fn = SUITES[n]
        checks.extend(fn(corrupt=corrupt) if n in ("eigenvector", "esgl") else fn())
    return checks
