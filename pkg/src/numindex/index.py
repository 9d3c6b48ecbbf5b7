"""Numerical-index estimation: minimize the radius/norm ratio over
operator entries, and run level-by-level limit scans.

The outer search is multistart coordinate pattern search over matrix
entries with step annealing.  The radius and norm values steering the
search are themselves lean lower-bound estimates (warm-started between
neighboring entries), so the searched minimum is biased; every restart
winner is therefore re-evaluated at a much larger budget and the reported
value is the minimum of the re-evaluated ratios.  That keeps the reported
number trustworthy at its witness and makes the minimum monotone in the
restart budget.  The result is an upper-bound estimate of the true
infimum: the search covers a subset of the norm-one operators.
"""

import csv
import io
import math
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels as K
from .errors import LevelRangeError
from .operators import Budget, Operator, compose_with_projection, operator_norm
from .radius import modified_radius, numerical_radius
from .spaces import TowerSpec

INF = math.inf

# Inner estimates that steer the outer search run at roughly a quarter of
# the outer per-restart effort; the final witness re-evaluation runs at ten
# times the inner effort (and a full multistart bank).
INNER_EVALS = 700
INNER_STEP_FLOOR = 3e-5
FINAL_EVAL_FACTOR = 10
FINAL_RESTARTS = 48
OUTER_STEP0 = 0.25
OUTER_STEP_FLOOR = 1e-7
NOISE_FLAG_SPREAD = 0.02

DEFAULT_INDEX_BUDGET = Budget(restarts=32, iterations=3000, tol=1e-8)


@dataclass(frozen=True)
class IndexEstimate:
    """Upper-bound estimate of the index with witness and restart trace."""

    value: float
    witness: Operator
    radius_value: float
    norm_value: float
    trace: tuple  # re-evaluated ratio per outer restart
    restarts: int
    iterations: int
    seed: int
    tol: float
    level: int = None  # operator depth for the modified variant

    @property
    def restart_spread(self) -> float:
        return float(np.std(self.trace)) if len(self.trace) > 1 else 0.0

    @property
    def noisy(self) -> bool:
        return self.restart_spread > NOISE_FLAG_SPREAD

    def to_dict(self) -> dict:
        out = {
            "value": self.value,
            "witness": self.witness.to_dict(),
            "radius_value": self.radius_value,
            "norm_value": self.norm_value,
            "trace": list(self.trace),
            "provenance": {
                "restarts": self.restarts,
                "iterations": self.iterations,
                "seed": self.seed,
                "tol": self.tol,
            },
        }
        if self.level is not None:
            out["level"] = self.level
        return out


class _LeanRatio:
    """Warm-started lean estimate of radius(T)/norm(T) used inside the search.

    For the modified variant the numerator is the best level compression
    over the ambient sphere; one warm witness is kept per level.
    """

    def __init__(self, spec: TowerSpec, ambient: TowerSpec, seed_key):
        self.spec = spec
        self.ambient = ambient  # None for the plain index
        target = ambient if ambient is not None else spec
        self.target = target
        self.arrays = target.arrays
        self.kind = target.kind
        d = target.dim
        rng = np.random.default_rng(np.random.SeedSequence(list(seed_key)))
        base = [np.eye(d), rng.standard_normal((1, d))]
        self.bank = np.ascontiguousarray(np.vstack(base))
        self.pert = (rng.standard_normal((32, d)) if self.kind != K.KIND_SMOOTH
                     else np.zeros((1, d)))
        levels = 1 if ambient is None else spec.depth
        self.warm = [None] * levels
        self.norm_warm = None
        self.flat_p = target.flat_p if target.is_flat else None
        self.op_arrays = spec.arrays
        self.op_kind = spec.kind
        self.op_flat_p = spec.flat_p if spec.is_flat else None
        op_rng = np.random.default_rng(np.random.SeedSequence(list(seed_key) + [5]))
        self.op_bank = np.ascontiguousarray(
            np.vstack([np.eye(spec.dim), op_rng.standard_normal((1, spec.dim))]))
        self.op_pert = (op_rng.standard_normal((32, spec.dim))
                        if spec.kind != K.KIND_SMOOTH else np.zeros((1, spec.dim)))

    def _norm(self, mat) -> float:
        if self.op_flat_p == 1.0:
            return K.opnorm_l1(mat)[0]
        if self.op_flat_p == INF:
            return K.opnorm_linf(mat)[0]
        if self.op_flat_p == 2.0:
            return K.opnorm_l2_power(mat, 1e-10, 500)[0]
        starts, leaf_q, comb_p = self.op_arrays
        if self.norm_warm is not None:
            pts = np.vstack([self.norm_warm[None, :], self.op_bank])
        else:
            pts = self.op_bank
        val, wit, _ = K.norm_ascent(mat, starts, leaf_q, comb_p, self.op_kind,
                                    pts, self.op_pert, INNER_EVALS, 0.25,
                                    INNER_STEP_FLOOR)
        self.norm_warm = wit
        return val

    def _radius_at(self, mat, slot: int) -> float:
        starts, leaf_q, comb_p = self.arrays
        if self.warm[slot] is not None:
            pts = np.vstack([self.warm[slot][None, :], self.bank])
        else:
            pts = self.bank
        val, wit, _ = K.radius_ascent(mat, starts, leaf_q, comb_p, self.kind,
                                      pts, self.pert, INNER_EVALS, 0.25,
                                      INNER_STEP_FLOOR)
        self.warm[slot] = wit
        return val

    def __call__(self, mat) -> float:
        n = self._norm(mat)
        if n < 1e-12:
            return INF
        if self.ambient is None:
            return self._radius_at(mat, 0) / n
        amb_d = self.ambient.dim
        starts_arr = self.ambient.arrays[0]
        best = -INF
        for j in range(1, self.spec.depth + 1):
            cut = int(starts_arr[j])
            comp = np.zeros((amb_d, amb_d))
            k = min(cut, mat.shape[0])
            comp[:k, :k] = mat[:k, :k]
            v = self._radius_at(comp, j - 1)
            if v > best:
                best = v
        return best / n


def _outer_starts(spec: TowerSpec, restarts: int, seed) -> list:
    """Deterministic outer start matrices: skew, shift, then gaussian."""
    d = spec.dim
    rng = np.random.default_rng(np.random.SeedSequence([seed, 101]))
    out = []
    if d > 1:
        a = rng.standard_normal((d, d))
        out.append((a - a.T) / 2.0)
        shift = np.zeros((d, d))
        for i in range(d - 1):
            shift[i + 1, i] = 1.0
        out.append(shift)
    while len(out) < restarts:
        out.append(rng.standard_normal((d, d)))
    return out[:restarts] if restarts > 0 else out[:1]


def _pattern_search(mat0, objective, max_evals: int, step_floor: float):
    """First-improvement coordinate search over entries with step halving."""
    mat = mat0.copy()
    val = objective(mat)
    evals = 1
    h = OUTER_STEP0
    d = mat.shape[0]
    while h > step_floor and evals < max_evals:
        improved = False
        for i in range(d):
            for j in range(d):
                for sg in (1.0, -1.0):
                    mat[i, j] += sg * h
                    v = objective(mat)
                    evals += 1
                    if v < val:
                        val = v
                        improved = True
                    else:
                        mat[i, j] -= sg * h
                    if evals >= max_evals:
                        break
                if evals >= max_evals:
                    break
            if evals >= max_evals:
                break
        if not improved:
            h *= 0.5
    return mat, val, evals


def _reevaluate(mat, spec: TowerSpec, ambient, budget: Budget, seed):
    """Honest ratio at a candidate witness, at ten times the inner effort."""
    final = Budget(restarts=FINAL_RESTARTS,
                   iterations=FINAL_EVAL_FACTOR * INNER_EVALS,
                   tol=budget.tol, seed=seed)
    op = Operator(mat, spec)
    nrm = operator_norm(op, final)
    if nrm.value < 1e-12:
        return INF, None, None
    if ambient is None:
        rad = numerical_radius(op, final)
    else:
        rad = modified_radius(op, ambient, final)
    return rad.value / nrm.value, rad, nrm


def _search_index(spec: TowerSpec, ambient, budget: Budget, seed: int,
                  level=None, warm_ops=None) -> IndexEstimate:
    if spec.dim == 1:
        # scalars: the radius equals the norm, so the index is exactly one
        wit = Operator(np.ones((1, 1)), spec)
        return IndexEstimate(1.0, wit, 1.0, 1.0, (1.0,), 0, 0, seed,
                             budget.tol, level=level)
    starts = _outer_starts(spec, budget.restarts, seed)
    if warm_ops:
        starts = [np.array(w, dtype=np.float64, copy=True)
                  for w in warm_ops] + starts
    step_floor = max(OUTER_STEP_FLOOR, 10.0 * budget.tol)
    traces = []
    cands = []
    total_evals = 0
    for r, mat0 in enumerate(starts):
        lean = _LeanRatio(spec, ambient, (seed, 7001, r))
        n0 = lean._norm(mat0)
        if n0 > 1e-12:
            mat0 = mat0 / n0
        mat, _, evals = _pattern_search(mat0, lean, budget.iterations, step_floor)
        total_evals += evals
        ratio, rad, nrm = _reevaluate(mat, spec, ambient, budget, seed)
        if rad is None:
            continue
        traces.append(ratio)
        cands.append((ratio, mat / nrm.value, rad.value / nrm.value, 1.0))
    best = min(range(len(cands)), key=lambda i: cands[i][0])
    ratio, wmat, radv, nrmv = cands[best]
    return IndexEstimate(float(ratio), Operator(wmat, spec), float(radv),
                         float(nrmv), tuple(traces), len(starts),
                         total_evals, seed, budget.tol, level=level)


def estimate_index(spec: TowerSpec, budget: Budget = None, seed: int = 0,
                   warm_ops=None) -> IndexEstimate:
    """Upper-bound estimate of inf of radius over norm-one operators.

    ``warm_ops`` prepends candidate witness matrices to the outer starts
    (used by the limit scan to continue from shallower levels).
    """
    if budget is None:
        budget = DEFAULT_INDEX_BUDGET
    return _search_index(spec, None, budget, seed, warm_ops=warm_ops)


def estimate_modified_index(spec: TowerSpec, m: int = None,
                            budget: Budget = None, seed: int = 0,
                            warm_ops=None) -> IndexEstimate:
    """Like estimate_index but with the compressed radius as numerator.

    Operators live on the depth-m truncation of ``spec``; the compression
    levels range over 1..m and states over the full tower.
    """
    if budget is None:
        budget = DEFAULT_INDEX_BUDGET
    if m is None:
        m = spec.depth
    if not 1 <= m <= spec.depth:
        raise LevelRangeError("level %d outside 1..%d" % (m, spec.depth))
    sub = spec.truncate(m)
    if sub.dim == 1:
        return _search_index(sub, None, budget, seed)
    # states range over the full tower even when m equals the depth
    return _search_index(sub, spec, budget, seed, level=m, warm_ops=warm_ops)


def scan_envelope(k: int) -> float:
    """Declining bound for the k-th successive index difference (k >= 1)."""
    return max(0.03, 0.6 ** (k - 1))


@dataclass(frozen=True)
class ScanRow:
    m: int
    index: IndexEstimate
    modified: IndexEstimate
    flags: tuple

    @property
    def flag_text(self) -> str:
        return ";".join(self.flags) if self.flags else "ok"


@dataclass(frozen=True)
class ScanTable:
    spec: TowerSpec
    rows: tuple
    budget: Budget
    seed: int

    @property
    def passed(self) -> bool:
        # "noisy" is informational; the convergence flags decide pass/fail
        return not any(f in ("below-deepest", "envelope")
                       for r in self.rows for f in r.flags)

    def convergence_flags(self) -> dict:
        return {r.m: r.flag_text for r in self.rows}

    def to_csv(self, witness_paths=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["m", "n_hat", "n1_hat", "witness_file", "restarts",
                    "seed", "flag"])
        for r in self.rows:
            wp = witness_paths.get(r.m, "") if witness_paths else ""
            w.writerow([r.m, "%.12g" % r.index.value,
                        "%.12g" % r.modified.value, wp,
                        r.index.restarts, self.seed, r.flag_text])
        return buf.getvalue()


def limit_scan(spec: TowerSpec, m_range, budget: Budget = None,
               seed: int = 0) -> ScanTable:
    """Index estimates level by level, with finite-scale convergence flags.

    Each level m gets the plain index of the depth-m truncation and the
    modified index with ambient states (the modified column runs at half
    the restart budget; the convergence checks gate the plain column only).
    Flags per row: "noisy" when the restart spread exceeds the threshold,
    "below-deepest" when the level estimate drops more than 0.03 below the
    deepest one, "envelope" when the successive difference exceeds the
    declining envelope.
    """
    if budget is None:
        budget = DEFAULT_INDEX_BUDGET
    mod_budget = replace(budget, restarts=max(2, budget.restarts // 2))
    levels = sorted(set(int(m) for m in m_range))
    if not levels:
        raise LevelRangeError("empty level range")
    if levels[0] < 1 or levels[-1] > spec.depth:
        raise LevelRangeError(
            "levels %s outside 1..%d" % (levels, spec.depth))
    plain = {}
    modified = {}
    prev_plain = None
    prev_mod = None
    for m in levels:
        sub = spec.truncate(m)
        # continuation: a shallower witness composed with the truncation
        # keeps its ratio, so deeper searches start at least as low
        warm_p = None
        warm_m = None
        if prev_plain is not None and prev_plain.witness.spec.dim > 1:
            pm = prev_plain.witness.spec.depth
            if pm < m:
                warm_p = [compose_with_projection(
                    prev_plain.witness, sub, m - pm).matrix]
        if prev_mod is not None and prev_mod.witness.spec.dim > 1:
            pm = prev_mod.witness.spec.depth
            if pm < m:
                warm_m = [compose_with_projection(
                    prev_mod.witness, sub, m - pm).matrix]
        plain[m] = estimate_index(sub, budget, seed, warm_ops=warm_p)
        modified[m] = estimate_modified_index(spec, m, mod_budget, seed,
                                              warm_ops=warm_m)
        prev_plain = plain[m]
        prev_mod = modified[m]
    deepest = plain[levels[-1]].value
    rows = []
    prev = None
    for k, m in enumerate(levels):
        flags = []
        if plain[m].noisy or modified[m].noisy:
            flags.append("noisy")
        if plain[m].value < deepest - 0.03:
            flags.append("below-deepest")
        if prev is not None and abs(plain[m].value - prev) > scan_envelope(k):
            flags.append("envelope")
        prev = plain[m].value
        rows.append(ScanRow(m, plain[m], modified[m], tuple(flags)))
    return ScanTable(spec, tuple(rows), budget, seed)
