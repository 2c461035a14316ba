"""Command-line front end: ``vtwalk gen | detect | sweep | weights | verify | p3l``.

Exit codes: 0 success, 1 verification failure, 2 input error, 3 resource cap.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import applications as apps
from .detection import detect
from .errors import DimensionTooLarge, VTWalkError
from .expansion import WeightScheme
from .experiments import (
    FAMILIES,
    MARK_POLICIES,
    SweepConfig,
    p3l_planted,
    random_tree,
    run_suite,
    run_sweep,
    weights_table,
    write_csv,
    write_weights_csv,
)
from .tree_model import ComputationTree, brute_force_has_marked

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_CAP = 0, 1, 2, 3
SCHEMES = [s.value for s in WeightScheme]


class InputError(Exception):
    pass


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def tree_from_spec(data: dict) -> ComputationTree:
    """Tree from the canonical format or from a VTS / DnC / bomb spec object."""
    if "vertices" in data:
        return ComputationTree.from_dict(data)
    if "vts" in data:
        d = data["vts"]
        return apps.vts_star(apps.VTSInstance(d["times"], d.get("solutions", [0] * len(d["times"]))))
    if "dnc" in data:
        d = data["dnc"]
        spec = apps.DnCSpec(int(d["a"]), int(d["b"]), int(d["n"]), d.get("taux", "linear"), d.get("leaf_marks"))
        return apps.dnc_tree(spec)
    if "bomb" in data:
        return apps.bomb_line_tree(apps.BombSpec(data["bomb"]["gaps"]))
    raise InputError("instance must contain one of 'vertices', 'vts', 'dnc', 'bomb'")


def load_instance(path: str) -> ComputationTree:
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text()
        return tree_from_spec(json.loads(text))
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"cannot read instance {path}: {exc}") from exc


# --------------------------------------------------------------------------
# gen


def cmd_gen(args) -> int:
    rng = np.random.default_rng(args.seed)
    fam = args.family
    if fam == "lines":
        lines, _ = p3l_planted(rng, args.n, positive=args.planted == "yes")
        header = f"# {len(lines)} lines, planted concurrent triple: {args.planted}, seed {args.seed}\n"
        _emit(header + apps.LineSet(lines).dumps(), args.out)
        return EXIT_OK
    if fam == "star":
        times = args.times or [1]
        sol = [0] * len(times)
        for i in args.marked or []:
            if not 1 <= i <= len(times):
                raise InputError(f"--marked index {i} outside 1..{len(times)}")
            sol[i - 1] = 1
        tree = apps.vts_star(apps.VTSInstance(times, sol))
    elif fam == "random_tree":
        tree = random_tree(rng, args.n, args.tmax, marked=args.marked_leaves)
    elif fam == "dnc":
        spec = apps.DnCSpec(args.a, args.b, args.n, args.taux)
        tree = apps.dnc_tree(spec)
        if args.mark_leaf is not None:
            leaves = tree.leaves()
            flags = np.zeros(len(tree), dtype=bool)
            flags[leaves[args.mark_leaf % len(leaves)]] = True
            tree = ComputationTree(tree.parents, tree.times, flags)
    elif fam == "bomb":
        gaps = args.gaps or [int(d) for d in rng.integers(1, args.dmax + 1, size=args.G)]
        tree = apps.bomb_line_tree(apps.BombSpec(gaps))
    else:
        tree = apps.p3l_cost_tree(args.n, args.r)
    _emit(tree.to_json() + "\n", args.out)
    return EXIT_OK


# --------------------------------------------------------------------------
# detect / sweep / weights / verify / p3l


def cmd_detect(args) -> int:
    tree = load_instance(args.instance)
    report = detect(
        tree,
        args.scheme,
        reps=args.reps,
        matrix_free=args.matrix_free,
        sample=args.sample,
        seed=args.seed,
        cap=args.dim_cap,
    )
    data = report.to_dict()
    data["brute_force_has_marked"] = brute_force_has_marked(tree)
    _emit(json.dumps(data, indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.config:
        try:
            conf = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read sweep config: {exc}") from exc
    else:
        conf = {}
    for key in ("family", "grid", "scheme", "seed", "reps", "t_max", "marked", "per_size", "a", "b", "taux", "r"):
        val = getattr(args, key)
        if val is not None:
            conf[key] = val
    conf.setdefault("grid", [])
    conf["matrix_free"] = args.matrix_free or conf.get("matrix_free", False)
    conf["timing"] = args.timing or conf.get("timing", False)
    conf["workers"] = args.workers
    if "family" not in conf:
        raise InputError("sweep needs --family (or a config file with 'family')")
    try:
        cfg = SweepConfig(**conf)
    except TypeError as exc:
        raise InputError(f"bad sweep config: {exc}") from exc
    rows = run_sweep(cfg)
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        write_csv(rows, out)
    finally:
        if args.out:
            out.close()
    return EXIT_OK


def cmd_weights(args) -> int:
    if any(t < 1 for t in args.t):
        raise InputError("path lengths must be >= 1")
    schemes = [WeightScheme.parse(s) for s in args.schemes] if args.schemes else None
    rows = weights_table(args.t, schemes)
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        write_weights_csv(rows, out)
    finally:
        if args.out:
            out.close()
    return EXIT_OK


def cmd_verify(args) -> int:
    checks = run_suite(args.suite, corrupt=args.corrupt_weight)
    failed = [c for c in checks if not c.passed]
    for c in checks:
        print(c.line())
    print(f"# {len(checks) - len(failed)}/{len(checks)} checks passed")
    for c in failed:
        print(f"# offender: {c.name}")
    return EXIT_FAIL if failed else EXIT_OK


def cmd_p3l(args) -> int:
    try:
        text = sys.stdin.read() if args.lines == "-" else Path(args.lines).read_text()
    except OSError as exc:
        raise InputError(str(exc)) from exc
    ls = apps.LineSet.parse(text)
    print(json.dumps({"n": len(ls), "concurrent_triple": apps.p3l_bruteforce(ls)}))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vtwalk", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a seeded instance file")
    g.add_argument("family", choices=[*FAMILIES, "lines"])
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")
    g.add_argument("--times", type=_ints, help="star: child times")
    g.add_argument("--marked", type=_ints, help="star: 1-based marked children")
    g.add_argument("--n", type=int, default=10)
    g.add_argument("--tmax", type=int, default=4)
    g.add_argument("--marked-leaves", type=int, default=0)
    g.add_argument("--a", type=int, default=2)
    g.add_argument("--b", type=int, default=2)
    g.add_argument("--taux", default="linear", choices=["linear", "quadratic", "sqrt", "unit"])
    g.add_argument("--mark-leaf", type=int)
    g.add_argument("--gaps", type=_ints)
    g.add_argument("--G", type=int, default=4)
    g.add_argument("--dmax", type=int, default=64)
    g.add_argument("--r", type=int, default=2)
    g.add_argument("--planted", choices=["yes", "no"], default="yes")
    g.set_defaults(func=cmd_gen)

    d = sub.add_parser("detect", help="run the detector on an instance file")
    d.add_argument("instance", help="JSON instance file or '-'")
    d.add_argument("--scheme", choices=SCHEMES, default="known")
    d.add_argument("--reps", type=int, default=15)
    d.add_argument("--matrix-free", action="store_true")
    d.add_argument("--sample", action="store_true")
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--dim-cap", type=int)
    d.add_argument("--out")
    d.set_defaults(func=cmd_detect)

    s = sub.add_parser("sweep", help="detector over a family and size grid, CSV out")
    s.add_argument("--config", help="JSON SweepConfig; flags override its fields")
    s.add_argument("--family", choices=FAMILIES)
    s.add_argument("--grid", type=_ints)
    s.add_argument("--scheme", choices=SCHEMES)
    s.add_argument("--seed", type=int)
    s.add_argument("--reps", type=int)
    s.add_argument("--tmax", dest="t_max", type=int)
    s.add_argument("--marked", choices=MARK_POLICIES)
    s.add_argument("--per-size", type=int)
    s.add_argument("--a", type=int)
    s.add_argument("--b", type=int)
    s.add_argument("--taux")
    s.add_argument("--r", type=int)
    s.add_argument("--matrix-free", action="store_true")
    s.add_argument("--timing", action="store_true", help="fill wall_time (breaks byte determinism)")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sweep)

    w = sub.add_parser("weights", help="R and W of a single path under each weighting")
    w.add_argument("--t", type=_ints, default=[4, 16, 256, 65536])
    w.add_argument("--schemes", type=lambda x: x.split(","))
    w.add_argument("--out")
    w.set_defaults(func=cmd_weights)

    v = sub.add_parser("verify", help="run invariant suites")
    v.add_argument("suite", nargs="?", default="all", choices=["eigenvector", "esgl", "detection", "applications", "all"])
    v.add_argument("--corrupt-weight", action="store_true", help="negative control: perturb one walk weight")
    v.set_defaults(func=cmd_verify)

    q = sub.add_parser("p3l", help="brute-force Point-On-3-Lines on a line file")
    q.add_argument("lines", help="file with one 'a b c' per line, or '-'")
    q.set_defaults(func=cmd_p3l)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DimensionTooLarge as exc:
        print(f"vtwalk: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (InputError, VTWalkError) as exc:
        print(f"vtwalk: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
