"""Property suite behind the ``verify`` command.

Each check measures a worst-case violation over sampled inputs and compares
it against the module tolerance it belongs to.  Checks that do not apply to
the configured space (smooth-only identities on a flat l1 space, say) are
reported as skipped.  The wrong-exponent fault injection corrupts the spec
used to build norming functionals while keeping the true norm, which must
trip the certification checks; it exists as a negative control for the
whole suite.
"""

import math
import time
from dataclasses import dataclass, replace
from itertools import product

import numpy as np

from .duality import (
    b_constant,
    certify_CC,
    dual_norm,
    norming_functional,
    norming_sup,
)
from .errors import DegenerateSupportError
from .index import estimate_index
from .operators import (
    Budget,
    Operator,
    compose_with_projection,
    identity,
    operator_norm,
    random_operator,
)
from .radius import modified_radius, numerical_radius, projection_radius_sequence
from .spaces import TowerSpec, TowerVector, project, sphere_sampler
from ._kernels import KIND_L1, KIND_LINF

INF = math.inf


@dataclass(frozen=True)
class PropertyResult:
    name: str
    samples: int
    max_violation: float
    threshold: float
    passed: bool
    skipped: bool = False
    note: str = ""
    seconds: float = 0.0

    def line(self, with_time: bool = False) -> str:
        if self.skipped:
            body = "SKIP %-34s %s" % (self.name, self.note)
        else:
            status = "PASS" if self.passed else "FAIL"
            body = "%s %-34s samples=%-5d max_violation=%.3e threshold=%.1e" % (
                status, self.name, self.samples, self.max_violation,
                self.threshold)
            if self.note:
                body += " " + self.note
        if with_time:
            body += "  [%.2fs]" % self.seconds
        return body


@dataclass(frozen=True)
class VerifyConfig:
    spec: TowerSpec
    samples: int = 200
    budget: Budget = None
    seed: int = 0
    fault: str = "none"  # "none" or "wrong-exponent"

    def __post_init__(self):
        if self.budget is None:
            object.__setattr__(
                self, "budget", Budget(restarts=16, iterations=2500, seed=self.seed))
        if self.fault not in ("none", "wrong-exponent"):
            raise ValueError("fault must be 'none' or 'wrong-exponent'")


def corrupted_spec(spec: TowerSpec) -> TowerSpec:
    """The wrong-exponent twin used by the negative control."""
    if spec.is_flat:
        p = 2.4 if spec.flat_p in (1.0, INF) else spec.flat_p + 0.4
        return TowerSpec.flat(spec.leaves[0], p)
    return TowerSpec(spec.leaves, tuple(p + 0.4 for p in spec.exponents))


# ---------------------------------------------------------------------------
# brute-force radius oracle on flat p in {1, inf}, small dimension
# ---------------------------------------------------------------------------

def _state_value(op: Operator, coords: np.ndarray) -> float:
    x = TowerVector(coords, op.spec)
    tx = TowerVector(op.matrix @ coords, op.spec)
    neg = TowerVector(-tx.coords, op.spec)
    return max(norming_sup(x, tx), norming_sup(x, neg))


def radius_bruteforce(op: Operator, grid: int = 24) -> float:
    """Exhaustive face/grid enumeration of the radius on flat l1 or sup.

    Every candidate value is realized by an actual state, so the result is
    a certified lower bound; with the face grids plus all extreme points it
    brackets the optimizer at dimension <= 3.
    """
    spec = op.spec
    d = spec.dim
    if spec.kind not in (KIND_L1, KIND_LINF):
        raise ValueError("brute force only covers flat l1 / sup-norm spaces")
    if d > 3:
        raise ValueError("brute force is limited to dimension <= 3")
    best = -INF
    if spec.kind == KIND_L1:
        # faces indexed by sign patterns; weights on a simplex grid
        for signs in product((-1.0, 0.0, 1.0), repeat=d):
            support = [i for i, s in enumerate(signs) if s != 0.0]
            if not support:
                continue
            k = len(support)
            for cuts in product(range(grid + 1), repeat=k - 1):
                w = np.zeros(k)
                prev = 0
                total = 0.0
                ok = True
                for idx, c in enumerate(sorted(cuts)):
                    if c < prev:
                        ok = False
                        break
                    w[idx] = (c - prev) / grid
                    total += w[idx]
                    prev = c
                if not ok:
                    continue
                w[k - 1] = 1.0 - total
                coords = np.zeros(d)
                for idx, i in enumerate(support):
                    coords[i] = signs[i] * w[idx]
                if np.all(coords == 0.0):
                    continue
                best = max(best, _state_value(op, coords))
    else:
        # cube faces: one pinned coordinate, grid over the free block
        lin = np.linspace(-1.0, 1.0, 2 * grid + 1)
        for pin in range(d):
            for s in (-1.0, 1.0):
                for rest in product(lin, repeat=d - 1):
                    coords = np.empty(d)
                    coords[pin] = s
                    j = 0
                    for i in range(d):
                        if i != pin:
                            coords[i] = rest[j]
                            j += 1
                    best = max(best, _state_value(op, coords))
    return float(best)


# ---------------------------------------------------------------------------
# the checks
# ---------------------------------------------------------------------------

CHECKS = []


def _check(name):
    def deco(fn):
        CHECKS.append((name, fn))
        return fn
    return deco


def _skip(name, note):
    return PropertyResult(name, 0, 0.0, 0.0, True, skipped=True, note=note)


def _vacuous(name, threshold):
    return PropertyResult(name, 0, 0.0, threshold, True,
                          note="WARNING: 0 samples, vacuous pass")


@_check("projection-nesting")
def _chk_nesting(cfg: VerifyConfig):
    name = "projection-nesting"
    spec = cfg.spec
    if spec.depth == 1:
        return _skip(name, "single-level space has no interior projections")
    if cfg.samples == 0:
        return _vacuous(name, 0.0)
    rng = np.random.default_rng((cfg.seed, 11))
    worst = 0.0
    n = 0
    for _ in range(cfg.samples):
        ints = rng.integers(-9, 10, spec.dim).astype(float)
        floats = rng.standard_normal(spec.dim)
        for coords in (ints, floats):
            x = TowerVector(coords, spec)
            for m in range(1, spec.depth + 1):
                for j in range(m, spec.depth + 1):
                    a = project(project(x, j), m)
                    b = project(x, m)
                    worst = max(worst, float(np.max(np.abs(a.coords - b.coords))))
                    n += 1
    return PropertyResult(name, n, worst, 0.0, worst == 0.0,
                          note="(exact equality required)")


@_check("projection-contraction")
def _chk_contraction(cfg: VerifyConfig):
    name = "projection-contraction"
    spec = cfg.spec
    if spec.depth == 1:
        return _skip(name, "single-level space has no interior projections")
    if cfg.samples == 0:
        return _vacuous(name, 1e-12)
    draw = sphere_sampler(spec, (cfg.seed, 12))
    worst = 0.0
    for _ in range(cfg.samples):
        x = draw()
        nx = x.norm()
        for m in range(1, spec.depth):
            worst = max(worst, project(x, m).norm() - nx)
    return PropertyResult(name, cfg.samples, max(worst, 0.0), 1e-12, worst <= 1e-12)


@_check("tower-flat-agreement")
def _chk_tower_flat(cfg: VerifyConfig):
    name = "tower-flat-agreement"
    spec = cfg.spec
    p = spec.flat_p if spec.is_flat else spec.exponents[0]
    uniform = TowerSpec.uniform([1] * spec.dim, p) if p > 1.0 else None
    if uniform is None:
        return _skip(name, "uniform tower needs an exponent in (1, inf)")
    if cfg.samples == 0:
        return _vacuous(name, 1e-12)
    rng = np.random.default_rng((cfg.seed, 13))
    worst = 0.0
    for _ in range(cfg.samples):
        c = rng.standard_normal(spec.dim)
        tower_val = TowerVector(c, uniform).norm()
        flat_val = float(np.sum(np.abs(c) ** p) ** (1.0 / p))
        worst = max(worst, abs(tower_val - flat_val) / max(1.0, flat_val))
    return PropertyResult(name, cfg.samples, worst, 1e-12, worst < 1e-12)


@_check("norm-absolute-monotonicity")
def _chk_monotone(cfg: VerifyConfig):
    name = "norm-absolute-monotonicity"
    if cfg.samples == 0:
        return _vacuous(name, 1e-12)
    rng = np.random.default_rng((cfg.seed, 14))
    spec = cfg.spec
    worst = 0.0
    for _ in range(cfg.samples):
        y = rng.standard_normal(spec.dim)
        shrink = rng.uniform(0.0, 1.0, spec.dim)
        x = y * shrink
        worst = max(worst,
                    TowerVector(x, spec).norm() - TowerVector(y, spec).norm())
    return PropertyResult(name, cfg.samples, max(worst, 0.0), 1e-12,
                          worst <= 1e-12)


@_check("norming-functional-certificate")
def _chk_norming(cfg: VerifyConfig):
    name = "norming-functional-certificate"
    spec = cfg.spec
    if not spec.is_smooth:
        return _skip(name, "set-valued duality map on a non-smooth space")
    if cfg.samples == 0:
        return _vacuous(name, 1e-10)
    src = corrupted_spec(spec) if cfg.fault == "wrong-exponent" else spec
    draw = sphere_sampler(spec, (cfg.seed, 15))
    worst = 0.0
    for _ in range(cfg.samples):
        x = draw()
        f = norming_functional(TowerVector(x.coords, src))
        f_true = type(f)(f.coords, spec)
        worst = max(worst, abs(f_true(x) - 1.0), abs(dual_norm(f_true) - 1.0))
    return PropertyResult(name, cfg.samples, worst, 1e-10, worst < 1e-10)


@_check("norming-gradient-check")
def _chk_gradient(cfg: VerifyConfig):
    name = "norming-gradient-check"
    spec = cfg.spec
    if not spec.is_smooth:
        return _skip(name, "gradient undefined on a non-smooth space")
    if cfg.samples == 0:
        return _vacuous(name, 1e-5)
    draw = sphere_sampler(spec, (cfg.seed, 16))
    n = max(10, cfg.samples // 10)
    h = 1e-6
    worst = 0.0
    for _ in range(n):
        x = draw()
        f = norming_functional(x)
        g = np.empty(spec.dim)
        for i in range(spec.dim):
            up = x.coords.copy()
            dn = x.coords.copy()
            up[i] += h
            dn[i] -= h
            g[i] = (TowerVector(up, spec).norm()
                    - TowerVector(dn, spec).norm()) / (2 * h)
        scale = max(1e-30, float(np.max(np.abs(g))))
        worst = max(worst, float(np.max(np.abs(f.coords - g))) / scale)
    return PropertyResult(name, n, worst, 1e-5, worst < 1e-5)


@_check("norming-sup-self-pairing")
def _chk_self_pairing(cfg: VerifyConfig):
    name = "norming-sup-self-pairing"
    if cfg.samples == 0:
        return _vacuous(name, 1e-10)
    spec = cfg.spec
    rng = np.random.default_rng((cfg.seed, 17))
    worst = 0.0
    for _ in range(cfg.samples):
        c = rng.standard_normal(spec.dim)
        if rng.uniform() < 0.3:
            c[rng.integers(0, spec.dim)] = 0.0  # exercise non-full support
        x = TowerVector(c, spec)
        n = x.norm()
        if n == 0.0:
            continue
        worst = max(worst, abs(norming_sup(x, x) - n))
    return PropertyResult(name, cfg.samples, worst, 1e-10, worst < 1e-10)


def _certify(cfg: VerifyConfig, mode: str):
    spec = cfg.spec
    name = "cc-certificate" if mode == "cc" else "lcc-certificate"
    if not spec.is_smooth:
        return _skip(name, "certification applies to smooth specs")
    if spec.depth == 1:
        return _skip(name, "single-level space has no restriction steps")
    if cfg.samples == 0:
        return _vacuous(name, 1e-9)
    if cfg.fault == "wrong-exponent":
        # functionals from the corrupted twin, norms from the true spec
        src = corrupted_spec(spec)
        draw = sphere_sampler(spec, (cfg.seed, 18))
        worst = 0.0
        for _ in range(cfg.samples):
            x = draw()
            fx = norming_functional(TowerVector(x.coords, src))
            f_true = type(fx)(fx.coords, spec)
            worst = max(worst, abs(f_true(x) - 1.0))
        return PropertyResult(name, cfg.samples, worst, 1e-9, worst < 1e-9,
                              note="(wrong-exponent fault injected)")
    rep = certify_CC(spec, cfg.samples, 1e-9, seed=(cfg.seed, 19), mode=mode)
    note = "skipped %d degenerate pairs" % rep.skipped_degenerate \
        if rep.skipped_degenerate else ""
    return PropertyResult(name, rep.checks, rep.max_violation, 1e-9,
                          rep.passed, note=note)


@_check("cc-certificate")
def _chk_cc(cfg: VerifyConfig):
    return _certify(cfg, "cc")


@_check("lcc-certificate")
def _chk_lcc(cfg: VerifyConfig):
    return _certify(cfg, "lcc")


@_check("b-constant-lower-bound")
def _chk_bconst(cfg: VerifyConfig):
    name = "b-constant-lower-bound"
    spec = cfg.spec
    if not spec.is_smooth or spec.depth == 1:
        return _skip(name, "needs a smooth multi-level space")
    if cfg.samples == 0:
        return _vacuous(name, 1e-12)
    draw = sphere_sampler(spec, (cfg.seed, 20))
    worst = 0.0
    n = 0
    for _ in range(cfg.samples):
        x = draw()
        for m in range(1, spec.depth):
            try:
                b = b_constant(x, m)
            except DegenerateSupportError:
                continue
            worst = max(worst, 1.0 - b.value)
            n += 1
    return PropertyResult(name, n, max(worst, 0.0), 1e-12, worst <= 1e-12)


@_check("opnorm-identity")
def _chk_op_identity(cfg: VerifyConfig):
    name = "opnorm-identity"
    est = operator_norm(identity(cfg.spec), cfg.budget)
    viol = abs(est.value - 1.0)
    return PropertyResult(name, 1, viol, 1e-12, viol <= 1e-12)


@_check("radius-below-opnorm")
def _chk_radius_bound(cfg: VerifyConfig):
    name = "radius-below-opnorm"
    if cfg.samples == 0:
        return _vacuous(name, 2e-8)
    n = max(5, cfg.samples // 20)
    worst = 0.0
    for k in range(n):
        t = random_operator(cfg.spec, (cfg.seed, 21, k))
        nu = numerical_radius(t, cfg.budget)
        nrm = operator_norm(t, cfg.budget)
        worst = max(worst, nu.value - nrm.value)
    thr = 2.0 * cfg.budget.tol
    return PropertyResult(name, n, max(worst, 0.0), thr, worst <= thr)


@_check("opnorm-closed-form-agreement")
def _chk_closed_forms(cfg: VerifyConfig):
    name = "opnorm-closed-form-agreement"
    if cfg.samples == 0:
        return _vacuous(name, 1e-6)
    n = max(4, cfg.samples // 25)
    worst = 0.0
    total = 0
    for p in (1.0, 2.0, INF):
        spec = TowerSpec.flat(3, p)
        for k in range(n):
            t = random_operator(spec, (cfg.seed, 22, int(p * 10) if p != INF else 999, k))
            exact = operator_norm(t, cfg.budget, method="auto")
            asc = operator_norm(t, cfg.budget, method="ascent")
            worst = max(worst, abs(exact.value - asc.value))
            total += 1
    return PropertyResult(name, total, worst, 1e-6, worst < 1e-6)


@_check("composed-norm-contraction")
def _chk_composed(cfg: VerifyConfig):
    name = "composed-norm-contraction"
    spec = cfg.spec
    if spec.depth < 2:
        return _skip(name, "needs tower depth >= 2")
    if cfg.samples == 0:
        return _vacuous(name, 2e-8)
    n = max(5, cfg.samples // 20)
    worst = 0.0
    m = max(1, spec.depth - 2) if spec.depth > 2 else 1
    sub = spec.truncate(m)
    for k in range(n):
        l = random_operator(sub, (cfg.seed, 23, k))
        lq = compose_with_projection(l, spec, spec.depth - m)
        worst = max(worst,
                    operator_norm(lq, cfg.budget).value
                    - operator_norm(l, cfg.budget).value)
    thr = 2.0 * cfg.budget.tol
    return PropertyResult(name, n, max(worst, 0.0), thr, worst <= thr)


@_check("radius-homogeneity")
def _chk_homogeneity(cfg: VerifyConfig):
    name = "radius-homogeneity"
    if cfg.samples == 0:
        return _vacuous(name, 1e-7)
    n = max(5, cfg.samples // 20)
    worst = 0.0
    rng = np.random.default_rng((cfg.seed, 24))
    for k in range(n):
        t = random_operator(cfg.spec, (cfg.seed, 24, k))
        alpha = float(rng.uniform(0.2, 3.0)) * (1 if k % 2 else -1)
        base = numerical_radius(t, cfg.budget).value
        scaled = numerical_radius(
            Operator(alpha * t.matrix, cfg.spec), cfg.budget).value
        worst = max(worst, abs(scaled - abs(alpha) * base) / max(1.0, abs(alpha)))
    return PropertyResult(name, n, worst, 1e-7, worst < 1e-7)


@_check("radius-subadditivity")
def _chk_subadd(cfg: VerifyConfig):
    name = "radius-subadditivity"
    if cfg.samples == 0:
        return _vacuous(name, 3e-8)
    n = max(5, cfg.samples // 20)
    worst = 0.0
    for k in range(n):
        a = random_operator(cfg.spec, (cfg.seed, 25, k))
        b = random_operator(cfg.spec, (cfg.seed, 26, k))
        s = Operator(a.matrix + b.matrix, cfg.spec)
        worst = max(worst,
                    numerical_radius(s, cfg.budget).value
                    - numerical_radius(a, cfg.budget).value
                    - numerical_radius(b, cfg.budget).value)
    thr = 3.0 * cfg.budget.tol
    return PropertyResult(name, n, max(worst, 0.0), thr, worst <= thr)


@_check("radius-bruteforce-smalldim")
def _chk_bruteforce(cfg: VerifyConfig):
    name = "radius-bruteforce-smalldim"
    if cfg.samples == 0:
        return _vacuous(name, 1e-4)
    n = max(3, cfg.samples // 40)
    worst = 0.0
    total = 0
    for p in (1.0, INF):
        for d in (2, 3):
            spec = TowerSpec.flat(d, p)
            for k in range(n):
                t = random_operator(spec, (cfg.seed, 27, d, k))
                est = numerical_radius(t, cfg.budget)
                oracle = radius_bruteforce(t, grid=12)
                worst = max(worst, abs(est.value - oracle))
                total += 1
    return PropertyResult(name, total, worst, 1e-4, worst < 1e-4)


@_check("compression-embedding-invariance")
def _chk_embedding(cfg: VerifyConfig):
    name = "compression-embedding-invariance"
    spec = cfg.spec
    if not spec.is_smooth or spec.depth < 2:
        return _skip(name, "needs a smooth tower of depth >= 2")
    if cfg.samples == 0:
        return _vacuous(name, 2e-5)
    n = max(5, cfg.samples // 20)
    m = spec.depth - 1
    sub = spec.truncate(m)
    worst = 0.0
    for k in range(n):
        l = random_operator(sub, (cfg.seed, 28, k), normalize=True,
                            budget=cfg.budget)
        lm = compose_with_projection(l, spec, 1)
        a = modified_radius(l, spec, cfg.budget)
        b = modified_radius(lm, spec, cfg.budget)
        worst = max(worst, abs(a.value - b.value))
    return PropertyResult(name, n, worst, 2e-5, worst < 2e-5)


@_check("projected-radius-sequence")
def _chk_wseq(cfg: VerifyConfig):
    name = "projected-radius-sequence"
    spec = cfg.spec
    if not spec.is_smooth or spec.depth < 3:
        return _skip(name, "needs a smooth tower of depth >= 3")
    if cfg.samples == 0:
        return _vacuous(name, 2e-5)
    n = max(5, cfg.samples // 20)
    m = 2 if spec.depth >= 3 else 1
    j_max = spec.depth - m
    sub = spec.truncate(m)
    worst_mono = 0.0
    worst_spread = 0.0
    for k in range(n):
        l = random_operator(sub, (cfg.seed, 29, k), normalize=True,
                            budget=cfg.budget)
        seq = projection_radius_sequence(l, spec, j_max, cfg.budget)
        vals = [e.value for e in seq]
        for a, b in zip(vals, vals[1:]):
            worst_mono = max(worst_mono, a - b)
        worst_spread = max(worst_spread, max(vals) - min(vals))
    worst = max(worst_mono, worst_spread / 2.0)
    return PropertyResult(
        name, n, worst, 1e-5, worst < 1e-5,
        note="mono=%.2e spread=%.2e" % (worst_mono, worst_spread))


@_check("index-sandwich")
def _chk_index_sandwich(cfg: VerifyConfig):
    name = "index-sandwich"
    if cfg.samples == 0:
        return _vacuous(name, 2e-8)
    small = Budget(restarts=2, iterations=600, tol=cfg.budget.tol,
                   seed=cfg.seed)
    est = estimate_index(cfg.spec, small, seed=cfg.seed)
    viol = max(0.0 - est.value, est.value - 1.0)
    thr = 2.0 * cfg.budget.tol
    return PropertyResult(name, est.restarts, max(viol, 0.0), thr, viol <= thr)


@_check("index-determinism")
def _chk_index_determinism(cfg: VerifyConfig):
    name = "index-determinism"
    small = Budget(restarts=2, iterations=400, tol=cfg.budget.tol,
                   seed=cfg.seed)
    a = estimate_index(cfg.spec, small, seed=cfg.seed)
    b = estimate_index(cfg.spec, small, seed=cfg.seed)
    same = (a.value == b.value
            and np.array_equal(a.witness.matrix, b.witness.matrix)
            and a.trace == b.trace)
    return PropertyResult(name, 2, 0.0 if same else 1.0, 0.0, same,
                          note="(bitwise equality of repeated runs)")


def run_suite(cfg: VerifyConfig) -> list:
    """Run every property check; returns the list of results in order."""
    out = []
    for name, fn in CHECKS:
        t0 = time.perf_counter()
        res = fn(cfg)
        out.append(replace(res, seconds=time.perf_counter() - t0))
    return out


def suite_passed(results) -> bool:
    return all(r.passed for r in results)
