"""Marked-vertex detection: phase estimation of ``U`` started from the root.

The phase register has ``s = log2 M`` bits; measuring ``0^s`` accepts.  For a
root state with spectral decomposition ``sum_k alpha_k |psi_k>`` the
probability of that outcome is

    sum_k |alpha_k|^2 * F_M(2 theta_k),
    F_M(phi) = sin^2(M phi / 2) / (M^2 sin^2(phi / 2)),

which is what :func:`qpe_accept_prob` evaluates from the eigensystem and what
:func:`statevector_qpe` reproduces by simulating the register explicitly.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import binom

from .errors import DimensionTooLarge
from .expansion import WeightScheme, expand
from .tree_model import ComputationTree
from .walk_operator import (
    EigenSystem,
    WalkOperator,
    basis_state,
    build_walk,
    dim_cap,
    eigensystem,
    eta,
    p_eps_norm,
    phi_m,
)

DEFAULT_REPS = 15
ACCEPT_FRACTION = 3 / 8
STATEVECTOR_CAP = 2**16
ZERO_PHASE = 1e-7


def next_pow2(x: float) -> int:
    if x <= 1:
        return 1
    return 1 << math.ceil(math.log2(x))


@dataclass(frozen=True)
class PrecisionPlan:
    epsilon: float
    M: int
    s: int
    reps: int = DEFAULT_REPS
    accept_threshold: int = math.ceil(3 * DEFAULT_REPS / 8)

    @property
    def controlled_applications(self) -> int:
        # sum_{j<s} 2^j controlled-U^(2^j) factors
        return self.M - 1

    @property
    def queries(self) -> int:
        return self.reps * 4 * self.controlled_applications


def plan_precision(T: float, D: int, reps: int = DEFAULT_REPS) -> PrecisionPlan:
    """Precision with ``eps * sqrt(1 + D*T) = 1/sqrt(8)`` and the matching ``M``.

    ``M`` is the smallest power of two with ``M >= pi*sqrt(2)/eps``, which
    bounds ``F_M(2 theta) <= 1/8`` for every ``|theta| >= eps``.
    """
    if T < 1 or D < 1:
        raise ValueError(f"plan needs T >= 1 and D >= 1, got T={T}, D={D}")
    if reps < 1:
        raise ValueError("reps must be >= 1")
    eps = 1.0 / (math.sqrt(8.0) * math.sqrt(1.0 + D * T))
    M = next_pow2(math.pi * math.sqrt(2.0) / eps)
    return PrecisionPlan(eps, M, M.bit_length() - 1, reps, math.ceil(3 * reps / 8))


def fejer(phi: np.ndarray, M: int) -> np.ndarray:
    """``|(1/M) sum_{j<M} exp(i j phi)|^2``."""
    phi = np.asarray(phi, dtype=float)
    den = np.sin(phi / 2.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.sin(M * phi / 2.0) ** 2 / (M * M * den * den)
    # below 1e-12 the kernel equals 1 to double precision
    return np.where(np.abs(den) < 1e-12, 1.0, val)


def qpe_accept_prob(eigs: EigenSystem, M: int) -> float:
    if M < 1 or M & (M - 1):
        raise ValueError(f"M must be a power of two, got {M}")
    return float(np.sum(eigs.root_overlaps * fejer(2.0 * eigs.phases, M)))


def statevector_qpe(walk: WalkOperator, M: int) -> float:
    """Probability of the all-zero register from an explicit QPE simulation.

    The joint state is stored as an ``(|E|, M)`` array whose column ``j`` is
    the system component paired with register value ``j``.
    """
    if M < 1 or M & (M - 1):
        raise ValueError(f"M must be a power of two, got {M}")
    if M * walk.dim > STATEVECTOR_CAP:
        raise DimensionTooLarge(f"M*|E| = {M * walk.dim} exceeds {STATEVECTOR_CAP}")
    s = M.bit_length() - 1
    state = np.zeros((walk.dim, M), dtype=complex)
    # Hadamards on every register qubit
    state[0, :] = 1.0 / math.sqrt(M)
    cols = np.arange(M)
    for q in range(s):
        sel = (cols >> q) & 1 == 1
        block = state[:, sel]
        for _ in range(1 << q):
            block = walk.apply_U(block)
        state[:, sel] = block
    k = cols[:, None] * cols[None, :]
    inverse_qft = np.exp(-2j * np.pi * k / M) / math.sqrt(M)
    state = state @ inverse_qft.T
    return float(np.vdot(state[:, 0], state[:, 0]).real)


def power_sum_accept_prob(walk: WalkOperator, M: int) -> float:
    """Matrix-free acceptance: ``||(1/M) sum_{j<M} U^j |r>||^2``."""
    v = basis_state(walk.dim)
    acc = v.copy()
    for _ in range(M - 1):
        v = walk.apply_U(v)
        acc += v
    acc /= M
    return float(np.vdot(acc, acc).real)


@dataclass
class DetectionReport:
    verdict: bool
    accept_prob_single: float
    queries: int
    plan: PrecisionPlan | None
    scheme: str
    n: int
    D: int
    T: int
    t_max: int
    expanded_size: int
    mode: str
    majority_accept_prob: float
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        return d

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)


def _effective_work(expanded) -> float:
    if expanded.scheme in (WeightScheme.KNOWN_TIMES, WeightScheme.EXPONENTIAL_BLOCKS):
        return expanded.source.total_work
    return expanded.weight_sum


def _spectral_summary(eigs: EigenSystem) -> dict:
    nonzero = np.abs(eigs.phases) > ZERO_PHASE
    gap = float(np.min(np.abs(eigs.phases[nonzero]))) if nonzero.any() else None
    return {
        "distinct_phases": int(len(eigs.phases)),
        "zero_phase_mass": float(eigs.root_overlaps[~nonzero].sum()),
        "min_nonzero_phase": gap,
    }


def detect(
    tree: ComputationTree,
    scheme: "WeightScheme | str" = WeightScheme.KNOWN_TIMES,
    plan: PrecisionPlan | None = None,
    *,
    reps: int = DEFAULT_REPS,
    matrix_free: bool = False,
    sample: bool = False,
    seed: int | None = None,
    cap: int | None = None,
) -> DetectionReport:
    """Run the detector on ``tree`` and report verdict, probability and cost.

    The default exact mode computes the per-repetition acceptance probability
    and accepts iff it exceeds 3/8.  ``sample=True`` instead draws ``reps``
    Bernoulli outcomes from a seeded generator and accepts on at least
    ``ceil(3 reps / 8)`` hits.  Dense spectra are used below the dimension cap;
    ``matrix_free=True`` switches to repeated application of ``U``.
    """
    scheme = WeightScheme.parse(scheme)
    if tree.n == 0:
        marked = bool(tree.marked[0])
        return DetectionReport(
            verdict=marked,
            accept_prob_single=1.0 if marked else 0.0,
            queries=0,
            plan=None,
            scheme=scheme.value,
            n=0,
            D=0,
            T=0,
            t_max=0,
            expanded_size=1,
            mode="classical",
            majority_accept_prob=1.0 if marked else 0.0,
            diagnostics={},
        )

    expanded = expand(tree, scheme)
    source = expanded.source
    if plan is None:
        plan = plan_precision(_effective_work(expanded), source.depth, reps)
    cap = dim_cap() if cap is None else cap
    if expanded.size > cap and not matrix_free:
        raise DimensionTooLarge(f"|E| = {expanded.size} exceeds the dense cap {cap}; use matrix_free")

    walk = build_walk(expanded, matrix_free=matrix_free, cap=cap)
    h = eta(expanded)
    diagnostics: dict = {
        "eta_norm": float(np.linalg.norm(h)),
        "epsilon": plan.epsilon,
        "walk_D": source.depth,
        "walk_T": _effective_work(expanded),
    }
    marks = expanded.marked_vertices()
    if marks:
        overlaps = []
        for m in marks:
            ph = phi_m(expanded, m)
            overlaps.append(abs(ph[0]) / np.linalg.norm(ph))
        diagnostics["overlap"] = float(max(overlaps))
    else:
        diagnostics["overlap"] = None

    if matrix_free:
        p = power_sum_accept_prob(walk, plan.M)
        mode = "matrix_free"
        diagnostics["p_eps_norm"] = None
    else:
        eigs = eigensystem(walk)
        p = qpe_accept_prob(eigs, plan.M)
        mode = "exact"
        diagnostics["p_eps_norm"] = p_eps_norm(eigs, plan.epsilon)
        diagnostics.update(_spectral_summary(eigs))
    p = min(max(p, 0.0), 1.0)

    majority = float(binom.sf(plan.accept_threshold - 1, plan.reps, p))
    if sample:
        rng = np.random.default_rng(seed)
        hits = int(np.sum(rng.random(plan.reps) < p))
        verdict = hits >= plan.accept_threshold
        diagnostics["hits"] = hits
        mode += "+sample"
    else:
        verdict = p > ACCEPT_FRACTION

    return DetectionReport(
        verdict=bool(verdict),
        accept_prob_single=float(p),
        queries=plan.queries,
        plan=plan,
        scheme=scheme.value,
        n=tree.n,
        D=tree.depth,
        T=tree.total_work,
        t_max=tree.t_max,
        expanded_size=expanded.size,
        mode=mode,
        majority_accept_prob=majority,
        diagnostics=diagnostics,
    )
