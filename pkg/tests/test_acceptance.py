"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``; the summary lines are
written to the terminal after the module finishes.
"""

import math
import subprocess
import sys
import time

import numpy as np
import pytest

from vtwalk import applications as apps
from vtwalk.detection import detect, qpe_accept_prob, statevector_qpe
from vtwalk.expansion import WeightScheme, expand, weighing_row
from vtwalk.experiments import (
    detection_instances,
    has_triple_point,
    loglog_slope,
    p3l_planted,
    padded_overhead,
    random_tree,
    star_instance,
    suite_trees,
)
from vtwalk.tree_model import brute_force_has_marked
from vtwalk.walk_operator import basis_state, build_walk, eigensystem, eta, p_eps_norm, phi_m

from conftest import dense_walk_oracle

pytestmark = pytest.mark.acceptance

RESULTS: dict[int, str] = {}


def report(num, title, ok, detail):
    RESULTS[num] = f"[{'PASS' if ok else 'FAIL'}] criterion {num:>2} {title}: {detail}"
    print(RESULTS[num])
    assert ok, RESULTS[num]


@pytest.fixture(scope="module", autouse=True)
def summary(request):
    yield
    tr = request.config.pluginmanager.getplugin("terminalreporter")
    lines = [RESULTS[k] for k in sorted(RESULTS)]
    if tr is not None:
        tr.write_line("")
        tr.write_sep("=", "acceptance criteria")
        for ln in lines:
            tr.write_line(ln)
    else:
        print("\n".join(lines))


@pytest.fixture(scope="module")
def marked_trees():
    return suite_trees(seed=1, count=20, marked=True)


def test_criterion_01_eigenvector(marked_trees):
    start = time.perf_counter()
    worst = 0.0
    for tree in marked_trees:
        ex = expand(tree, WeightScheme.KNOWN_TIMES)
        walk = build_walk(ex)
        RA, RB = dense_walk_oracle(ex)
        for m in ex.marked_vertices():
            ph = phi_m(ex, m)
            worst = max(
                worst,
                np.linalg.norm(walk.apply_RA(ph) - ph),
                np.linalg.norm(walk.apply_RB(ph) - ph),
                np.linalg.norm(RA @ ph - ph),
                np.linalg.norm(RB @ ph - ph),
            )
    elapsed = time.perf_counter() - start
    sizes = [t.n for t in marked_trees]
    ok = worst <= 1e-10 and elapsed < 10 and len(marked_trees) == 20 and max(sizes) <= 25
    report(1, "eigenvector residuals", ok, f"max residual {worst:.2e} <= 1e-10 over 20 trees, {elapsed:.2f} s < 10 s")


def test_criterion_02_overlap_norm(marked_trees):
    min_overlap, worst_norm = 1.0, -np.inf
    for tree in marked_trees:
        ex = expand(tree, WeightScheme.KNOWN_TIMES)
        for m in ex.marked_vertices():
            ph = phi_m(ex, m)
            min_overlap = min(min_overlap, abs(ph[0]) / np.linalg.norm(ph))
            worst_norm = max(worst_norm, np.vdot(ph, ph).real - 2 * tree.depth)
    ok = min_overlap >= 1 / math.sqrt(2) - 1e-12 and worst_norm <= 1e-9
    report(2, "overlap and norm", ok, f"min overlap {min_overlap:.12f} >= 1/sqrt2 - 1e-12, max(|phi|^2 - 2D) = {worst_norm:.3g} <= 1e-9")


def test_criterion_03_unmarked_esgl():
    worst_id, worst_gap = 0.0, -np.inf
    trees = suite_trees(seed=2, count=20, marked=False)
    for tree in trees:
        ex = expand(tree, WeightScheme.KNOWN_TIMES)
        walk = build_walk(ex)
        h = eta(ex)
        r = basis_state(ex.size)
        worst_id = max(worst_id, np.linalg.norm(walk.apply_RA(h) + h), np.linalg.norm(walk.apply_RB(h) - (2 * r - h)))
        eigs = eigensystem(walk)
        for eps in (0.01, 0.05, 0.1, 0.2):
            worst_gap = max(worst_gap, p_eps_norm(eigs, eps) - eps * math.sqrt(1 + tree.depth * tree.total_work))
    ok = worst_id <= 1e-10 and worst_gap <= 1e-9 and not any(brute_force_has_marked(t) for t in trees)
    report(3, "unmarked eta and ESGL", ok, f"eta identity residual {worst_id:.2e} <= 1e-10, max(p_eps - eps*sqrt(1+DT)) = {worst_gap:.3g} <= 1e-9")


def test_criterion_04_detection_gap():
    start = time.perf_counter()
    instances = detection_instances(seed=3, count=50)
    marked_min, unmarked_max, agree = 1.0, 0.0, 0
    schemes, kinds, max_dim = set(), set(), 0
    for tree, scheme in instances:
        rep = detect(tree, scheme)
        truth = brute_force_has_marked(tree)
        kinds.add(truth)
        schemes.add(scheme)
        max_dim = max(max_dim, rep.expanded_size)
        if truth:
            marked_min = min(marked_min, rep.accept_prob_single)
        else:
            unmarked_max = max(unmarked_max, rep.accept_prob_single)
        agree += rep.verdict == truth
    elapsed = time.perf_counter() - start
    ok = (
        marked_min >= 0.5 - 1e-9
        and unmarked_max <= 0.25 + 1e-9
        and agree == 50
        and kinds == {True, False}
        and len(schemes) == 2
        and max_dim <= 300
        and elapsed < 300
    )
    report(
        4,
        "detection gap",
        ok,
        f"marked min {marked_min:.6f} >= 1/2, unmarked max {unmarked_max:.6f} <= 1/4, agreement {agree}/50, max |E| {max_dim}, {elapsed:.1f} s",
    )


def test_criterion_05_qpe_oracle():
    rng = np.random.default_rng(105)
    worst, count, max_joint = 0.0, 0, 0
    for i in range(10):
        tree = random_tree(rng, int(rng.integers(1, 8)), 4, marked=i % 2)
        walk = build_walk(expand(tree))
        M = 1 << int(rng.integers(1, 7))
        while M * walk.dim > 2**16:
            M //= 2
        max_joint = max(max_joint, M * walk.dim)
        worst = max(worst, abs(statevector_qpe(walk, M) - qpe_accept_prob(eigensystem(walk), M)))
        count += 1
    ok = worst <= 1e-8 and count == 10 and max_joint <= 2**16
    report(5, "QPE oracle agreement", ok, f"max |statevector - spectral| = {worst:.2e} <= 1e-8 on {count} instances")


def test_criterion_06_query_scaling():
    xs, ys = [], []
    for g in (6, 8, 10, 12):
        tree = star_instance(g)
        rep = detect(tree, WeightScheme.KNOWN_TIMES, matrix_free=tree.total_work + 1 > 4096)
        assert rep.verdict
        xs.append(tree.total_work * tree.depth)
        ys.append(rep.queries)
    assert xs == [2**6, 2**8, 2**10, 2**12]
    slope = loglog_slope(xs, ys)
    c, factor = padded_overhead((4, 16, 64, 256))
    ok = abs(slope - 0.5) <= 0.05 and factor <= 2.0
    report(6, "query scaling", ok, f"slope {slope:.4f} in 0.5 +- 0.05; padded/known ~ c*sqrt(log2 t_max) with c = {c:.3f}, max deviation x{factor:.3f} <= 2")


def test_criterion_07_weighing_table():
    t = 2**16
    e = weighing_row(t, WeightScheme.EXPONENTIAL_BLOCKS)
    lin = weighing_row(t, WeightScheme.LINEAR_RAMP)
    u = weighing_row(t, WeightScheme.UNIT)
    ok = (
        1.30 <= e["W/t2"] <= 1.34
        and 0.9 <= e["R/log2t"] <= 1.2
        and 1.00 <= 2 * lin["W/t2"] <= 1.01
        and 1.0 <= lin["R/lnt"] <= 1.1
        and u["R"] == u["W"] == t
    )
    report(
        7,
        "weighing table",
        ok,
        f"expblocks W/t^2 {e['W/t2']:.4f}, R/log2t {e['R/log2t']:.4f}; linear W/(t^2/2) {2 * lin['W/t2']:.5f}, R/lnt {lin['R/lnt']:.4f}; unit R = W = {u['R']:g}",
    )


def test_criterion_08_dnc():
    worst = -np.inf
    for a in (1, 2, 3):
        for k in range(11):
            for taux in ("linear", "quadratic", "sqrt"):
                spec = apps.DnCSpec(a, 2, 2**k, taux)
                worst = max(worst, math.sqrt(apps.dnc_tree(spec).total_work) - apps.dnc_recurrence(spec))
    spec = apps.DnCSpec(2, 2, 8, "linear")
    sq = math.sqrt(apps.dnc_tree(spec).total_work)
    tq = apps.dnc_recurrence(spec)
    ok = worst <= 0 and round(sq, 3) == 10.954 and round(tq, 2) == 20.49
    report(8, "divide and conquer", ok, f"max sqrt(T) - T_Q = {worst:.3f} <= 0 over grid; example {sq:.3f} vs {tq:.3f}")


def test_criterion_09_bomb():
    rng = np.random.default_rng(109)
    worst = -np.inf
    for _ in range(100):
        spec = apps.BombSpec(rng.integers(1, 10**4, size=int(rng.integers(1, 40))))
        t = np.array(spec.times, dtype=float)
        worst = max(worst, t.sum() - math.sqrt((t * t).sum() * spec.G))
    eq = 0.0
    for d, G in [(16, 4), (1, 1), (99, 7), (10**6, 30)]:
        t = np.array(apps.BombSpec((d,) * G).times, dtype=float)
        eq = max(eq, abs(t.sum() - math.sqrt((t * t).sum() * G)))
    ok = worst <= 1e-12 and eq <= 1e-12
    report(9, "bomb Cauchy-Schwarz", ok, f"max(sum t - sqrt(sum t^2 G)) = {worst:.3g} on 100 vectors, equal-gap deviation {eq:.1e}")


def test_criterion_10_p3l():
    rng = np.random.default_rng(110)
    wrong = {True: 0, False: 0}
    max_n = 0
    for i in range(200):
        positive = i % 2 == 0
        lines, _ = p3l_planted(rng, int(rng.integers(3, 41)), positive=positive)
        max_n = max(max_n, len(lines))
        got = apps.p3l_bruteforce(lines)
        wrong[positive] += got != positive or got != has_triple_point(lines)
    band = []
    for k in range(9):
        s = apps.p3l_cost_summary(2**k, 2)
        band.append(s["sqrt_T_over_n"] / math.sqrt(s["D"] + 1))
    ok = wrong == {True: 0, False: 0} and max_n <= 40 and 0.8 <= min(band) and max(band) <= 1.2
    report(10, "Point-On-3-Lines", ok, f"errors {wrong[True]}/100 positive, {wrong[False]}/100 negative; cost band [{min(band):.3f}, {max(band):.3f}] within [0.8, 1.2]")


def _cli(*args, cwd):
    return subprocess.run([sys.executable, "-m", "vtwalk", *args], capture_output=True, cwd=cwd)


def test_criterion_11_cli_determinism(tmp_path):
    outputs = []
    for run in range(2):
        d = tmp_path / f"run{run}"
        d.mkdir()
        gen = _cli("gen", "random_tree", "--n", "10", "--tmax", "4", "--seed", "7", "--out", "t.json", cwd=d)
        sweep = _cli("sweep", "--family", "random_tree", "--grid", "4,8,12", "--per-size", "2", "--seed", "9", "--out", "s.csv", cwd=d)
        assert gen.returncode == 0 and sweep.returncode == 0, (gen.stderr, sweep.stderr)
        outputs.append(((d / "t.json").read_bytes(), (d / "s.csv").read_bytes()))
    verify = _cli("verify", "all", cwd=tmp_path)
    ok = outputs[0] == outputs[1] and verify.returncode == 0
    report(11, "CLI determinism", ok, f"gen identical {outputs[0][0] == outputs[1][0]}, sweep identical {outputs[0][1] == outputs[1][1]}, verify all exit {verify.returncode}")
