"""Norming functionals, duality-map sets, rescaling constants and the
characterization-condition certifier.

On a smooth spec the norming functional of x is the gradient of the norm:
per leaf block it is the lq gradient, and the blocks are weighted by a
product of prefix-norm ratios walking down from the top combine step.  On
the flat non-smooth spaces the duality map is set-valued and is exposed
only through ``norming_sup`` (the exact sup over the set), never as a
single selected functional.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .errors import (
    DegenerateSupportError,
    DimensionMismatchError,
    NonSmoothSpecError,
    ZeroVectorError,
)
from .spaces import TowerSpec, TowerVector, prefix_norm, sphere_sampler

INF = np.inf


@dataclass(frozen=True)
class Functional:
    """A dual vector over a primal space; pairing is the plain dot product."""

    coords: np.ndarray
    spec: TowerSpec

    def __post_init__(self):
        arr = np.array(self.coords, dtype=np.float64, copy=True).reshape(-1)
        if arr.shape[0] != self.spec.dim:
            raise DimensionMismatchError(
                "functional has %d coordinates, space has dimension %d"
                % (arr.shape[0], self.spec.dim))
        arr.setflags(write=False)
        object.__setattr__(self, "coords", arr)

    def __call__(self, x) -> float:
        coords = x.coords if isinstance(x, TowerVector) else np.asarray(x, float)
        if coords.shape[0] != self.spec.dim:
            raise DimensionMismatchError("pairing dimension mismatch")
        return float(self.coords @ coords)

    def dual_norm(self) -> float:
        return dual_norm(self)


def dual_norm(f: Functional) -> float:
    """Tower norm of f taken with conjugate exponents at every level."""
    starts, leaf_q, comb_p = f.spec.conjugate.arrays
    return float(K.tower_norm(f.coords, starts, leaf_q, comb_p))


def norming_functional(x: TowerVector) -> Functional:
    """The unique norm-attaining dual unit vector at a smooth point."""
    if not x.spec.is_smooth:
        raise NonSmoothSpecError(
            "the duality map is set-valued on %s; use norming_sup"
            % x.spec.describe())
    starts, leaf_q, comb_p = x.spec.arrays
    f = np.empty(x.spec.dim)
    n = K.norming_coeffs(x.coords, starts, leaf_q, comb_p, f)
    if n == 0.0:
        raise ZeroVectorError("no norming functional at the zero vector")
    return Functional(f, x.spec)


def norming_sup(x: TowerVector, v: TowerVector) -> float:
    """sup of f(v) over all norming functionals f of x.

    Smooth specs: the single functional applied to v.  Flat l1: signs on the
    support of x, absolute values off it.  Flat sup-norm: best signed value
    of v over the coordinates where |x_i| attains the max.
    """
    if x.spec != v.spec:
        raise DimensionMismatchError("x and v live on different specs")
    if x.norm() == 0.0:
        raise ZeroVectorError("norming set undefined at the zero vector")
    starts, leaf_q, comb_p = x.spec.arrays
    fbuf = np.empty(x.spec.dim)
    return float(
        K.pair_sup(x.coords, v.coords, starts, leaf_q, comb_p, x.spec.kind, fbuf)
    )


@dataclass(frozen=True)
class NormingSet:
    """Description of the set of norming functionals at a point.

    ``structure`` is "smooth" (a single functional), "l1-face" (signs fixed
    on the support, each off-support coordinate free in [-1, 1]) or
    "sup-face" (convex hull of the signed max-attaining basis functionals).
    """

    base: TowerVector
    structure: str
    functional: Functional = None
    support_signs: np.ndarray = None
    argmax_indices: tuple = None

    def sup(self, v: TowerVector) -> float:
        return norming_sup(self.base, v)

    def sample_members(self, count: int, seed) -> list:
        """Draw members of the set; every one norms the base point."""
        rng = np.random.default_rng(seed)
        x = self.base.normalized()
        if self.structure == "smooth":
            return [self.functional] * count
        out = []
        if self.structure == "l1-face":
            for _ in range(count):
                f = rng.uniform(-1.0, 1.0, x.spec.dim)
                mask = self.support_signs != 0.0
                f[mask] = self.support_signs[mask]
                out.append(Functional(f, x.spec))
            return out
        for _ in range(count):
            w = rng.uniform(0.0, 1.0, len(self.argmax_indices))
            w /= w.sum()
            f = np.zeros(x.spec.dim)
            for wi, i in zip(w, self.argmax_indices):
                f[i] = wi * np.sign(x.coords[i])
            out.append(Functional(f, x.spec))
        return out


def norming_set(x: TowerVector) -> NormingSet:
    """Structure of the duality-map set at x (x nonzero)."""
    n = x.norm()
    if n == 0.0:
        raise ZeroVectorError("norming set undefined at the zero vector")
    kind = x.spec.kind
    if kind == K.KIND_SMOOTH:
        return NormingSet(x, "smooth", functional=norming_functional(x))
    if kind == K.KIND_L1:
        return NormingSet(x, "l1-face", support_signs=np.sign(x.coords))
    m = np.max(np.abs(x.coords))
    idx = tuple(int(i) for i in np.flatnonzero(np.abs(x.coords) == m))
    return NormingSet(x, "sup-face", argmax_indices=idx)


@dataclass(frozen=True)
class BConstant:
    """Rescaling that turns the restricted functional into a norming one."""

    value: float
    level: int
    base: TowerVector


def b_constant(x: TowerVector, m: int) -> BConstant:
    """Constant b with b * f|_{level m} norming for the projection of x.

    Computed as the product of prefix-norm ratios (N_{j+1}/N_j)^(p_j - 1)
    over the levels above m; on a flat uniform tower this telescopes to
    (|x| / |P_m x|)^(p-1).  Requires a smooth spec and a nonzero projection.
    """
    if not x.spec.is_smooth:
        raise NonSmoothSpecError("b-constants need a smooth spec")
    depth = x.spec.depth
    if not 1 <= m <= depth:
        raise DegenerateSupportError("level %d outside 1..%d" % (m, depth))
    starts, leaf_q, comb_p = x.spec.arrays
    nn = np.empty(depth)
    K.prefix_norms(x.coords, starts, leaf_q, comb_p, nn)
    if nn[m - 1] == 0.0:
        raise DegenerateSupportError(
            "projection to level %d is zero; the rescaling constant is undefined" % m)
    b = 1.0
    for j in range(m, depth):
        b *= (nn[j] / nn[j - 1]) ** (comb_p[j - 1] - 1.0)
    return BConstant(float(b), m, x)


def restrict(f: Functional, m: int) -> Functional:
    """Restriction of a functional to the level-m subspace (tail zeroed)."""
    starts = f.spec.arrays[0]
    out = f.coords.copy()
    out[int(starts[m]):] = 0.0
    return Functional(out, f.spec)


@dataclass(frozen=True)
class CCReport:
    """Outcome of a characterization-condition certification run."""

    spec: TowerSpec
    mode: str
    samples: int
    tol: float
    seed: object
    checks: int
    skipped_degenerate: int
    max_violation: float
    min_b_at_unit: float
    passed: bool

    def summary(self) -> str:
        return (
            "%s %s: %d checks, %d degenerate skipped, max violation %.3e, "
            "min b %.12g -> %s"
            % (self.mode.upper(), self.spec.describe(), self.checks,
               self.skipped_degenerate, self.max_violation,
               self.min_b_at_unit, "pass" if self.passed else "FAIL")
        )


def _one_step_violation(x: TowerVector, m: int):
    """Violation of the norming property of b * f|_m at the projection.

    Returns (violation, b): the worse of the pairing defect against the
    projected norm and the dual-norm defect against 1.
    """
    f = norming_functional(x)
    b = b_constant(x, m)
    fr = restrict(f, m)
    target = prefix_norm(x, m)
    pairing = b.value * float(fr.coords @ x.coords)  # tail of fr is zero
    # the restricted functional, read on the truncated space
    cut = int(x.spec.arrays[0][m])
    sub = Functional(fr.coords[:cut], x.spec.truncate(m))
    dn = b.value * dual_norm(sub)
    return max(abs(pairing - target), abs(dn - 1.0)), b.value


def certify_CC(spec: TowerSpec, samples: int, tol: float, seed: int = 0,
               mode: str = "cc") -> CCReport:
    """Certify the norming-restriction identity on sampled unit vectors.

    mode "cc": every level m below the depth is checked from the full
    tower.  mode "lcc": only the one-step restriction from level m+1 to
    level m, sampling on the level-(m+1) sphere.  Degenerate pairs (zero
    projection) are skipped and counted; violations are reported, never
    raised.
    """
    if mode not in ("cc", "lcc"):
        raise ValueError("mode must be 'cc' or 'lcc'")
    if not spec.is_smooth:
        raise NonSmoothSpecError("certification applies to smooth specs")
    seed_key = (seed,) if isinstance(seed, (int, np.integer)) else tuple(seed)
    max_violation = 0.0
    min_b = INF
    checks = 0
    skipped = 0
    if spec.depth > 1:
        if mode == "cc":
            draw = sphere_sampler(spec, seed_key)
            for _ in range(samples):
                x = draw()
                for m in range(1, spec.depth):
                    try:
                        viol, b = _one_step_violation(x, m)
                    except DegenerateSupportError:
                        skipped += 1
                        continue
                    checks += 1
                    max_violation = max(max_violation, viol)
                    min_b = min(min_b, b)
        else:
            for m in range(1, spec.depth):
                sub = spec.truncate(m + 1)
                draw = sphere_sampler(sub, seed_key + (m,))
                for _ in range(samples):
                    x = draw()
                    try:
                        viol, b = _one_step_violation(x, m)
                    except DegenerateSupportError:
                        skipped += 1
                        continue
                    checks += 1
                    max_violation = max(max_violation, viol)
                    min_b = min(min_b, b)
    if min_b == INF:
        min_b = 1.0
    return CCReport(
        spec=spec, mode=mode, samples=samples, tol=tol, seed=seed,
        checks=checks, skipped_degenerate=skipped,
        max_violation=max_violation, min_b_at_unit=min_b,
        passed=bool(max_violation < tol and min_b >= 1.0 - 1e-12),
    )
