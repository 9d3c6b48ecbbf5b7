"""Mixed-exponent lp-sum towers: specs, vectors and the projection family.

A tower is described by leaf block dimensions and one combining exponent per
join step.  The norm is built bottom-up: start from the first block, then at
step k fold in block k+1 via (prev^p_k + next^p_k)^(1/p_k).  Each leaf block
carries the lp norm of the step where it joins (the first block shares the
first combining exponent), so a tower with one uniform exponent is exactly
the flat lp space of the total dimension.

Combining exponents must lie in (1, inf) so every nonzero point is smooth;
p = 1 and p = inf are supported only as flat single-block spaces.
"""

import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _kernels as K
from .errors import (
    DimensionMismatchError,
    LevelRangeError,
    SpecValidationError,
    ZeroVectorError,
)

INF = math.inf


def conjugate_exponent(p: float) -> float:
    if p == 1.0:
        return INF
    if p == INF:
        return 1.0
    return p / (p - 1.0)


@dataclass(frozen=True)
class TowerSpec:
    """Recursive space description: leaf dimensions plus combining exponents.

    ``flat_p`` is only meaningful for single-leaf (flat) specs and may be
    1, inf or anything in between; multi-leaf towers take their exponents
    from ``exponents`` and must stay inside the smooth range (1, inf).
    """

    leaves: tuple
    exponents: tuple = ()
    flat_p: float = None

    def __post_init__(self):
        leaves = tuple(int(d) for d in self.leaves)
        exponents = tuple(float(p) for p in self.exponents)
        object.__setattr__(self, "leaves", leaves)
        object.__setattr__(self, "exponents", exponents)
        if self.flat_p is not None:
            object.__setattr__(self, "flat_p", float(self.flat_p))
        if not leaves:
            raise SpecValidationError("at least one leaf block is required")
        if any(d < 1 for d in leaves):
            raise SpecValidationError("leaf dimensions must be >= 1")
        if len(leaves) == 1:
            if exponents:
                raise SpecValidationError("a flat space takes no combining exponents")
            if self.flat_p is None:
                raise SpecValidationError("a flat space needs flat_p")
            if not (self.flat_p >= 1.0):
                raise SpecValidationError("flat exponent must lie in [1, inf]")
        else:
            if self.flat_p is not None:
                raise SpecValidationError("flat_p is only valid for single-leaf specs")
            if len(exponents) != len(leaves) - 1:
                raise SpecValidationError(
                    "need one combining exponent per join: %d leaves, %d exponents"
                    % (len(leaves), len(exponents))
                )
            for p in exponents:
                if not (1.0 < p < INF):
                    raise SpecValidationError(
                        "combining exponents must lie in (1, inf); "
                        "p=1 and p=inf are flat-only"
                    )

    @property
    def depth(self) -> int:
        return len(self.leaves)

    @property
    def dim(self) -> int:
        return sum(self.leaves)

    @property
    def is_flat(self) -> bool:
        return len(self.leaves) == 1

    @property
    def kind(self) -> int:
        """Kernel kind code: 0 smooth, 1 flat l1, 2 flat sup-norm."""
        if self.is_flat:
            if self.flat_p == 1.0:
                return K.KIND_L1
            if self.flat_p == INF:
                return K.KIND_LINF
        return K.KIND_SMOOTH

    @property
    def is_smooth(self) -> bool:
        return self.kind == K.KIND_SMOOTH

    @cached_property
    def arrays(self):
        """(starts, leaf_q, comb_p) in the kernel layout."""
        starts = np.zeros(self.depth + 1, dtype=np.int64)
        starts[1:] = np.cumsum(self.leaves)
        if self.is_flat:
            leaf_q = np.array([self.flat_p], dtype=np.float64)
            comb_p = np.zeros(0, dtype=np.float64)
        else:
            leaf_q = np.array((self.exponents[0],) + self.exponents, dtype=np.float64)
            comb_p = np.array(self.exponents, dtype=np.float64)
        starts.setflags(write=False)
        leaf_q.setflags(write=False)
        comb_p.setflags(write=False)
        return starts, leaf_q, comb_p

    @cached_property
    def conjugate(self) -> "TowerSpec":
        """Spec of the dual space: every exponent replaced by its conjugate."""
        if self.is_flat:
            return TowerSpec(self.leaves, (), conjugate_exponent(self.flat_p))
        return TowerSpec(
            self.leaves, tuple(conjugate_exponent(p) for p in self.exponents)
        )

    def truncate(self, m: int) -> "TowerSpec":
        """Spec of the level-m subspace (the first m blocks)."""
        if not 1 <= m <= self.depth:
            raise LevelRangeError("level %d outside 1..%d" % (m, self.depth))
        if m == self.depth:
            return self
        if m == 1:
            return TowerSpec((self.leaves[0],), (), self.exponents[0])
        return TowerSpec(self.leaves[:m], self.exponents[: m - 1])

    def block_slice(self, k: int) -> slice:
        starts = self.arrays[0]
        return slice(int(starts[k - 1]), int(starts[k]))

    @classmethod
    def flat(cls, dim: int, p: float) -> "TowerSpec":
        return cls((dim,), (), p)

    @classmethod
    def uniform(cls, leaves, p: float) -> "TowerSpec":
        leaves = tuple(leaves)
        if len(leaves) == 1:
            return cls.flat(leaves[0], p)
        return cls(leaves, (p,) * (len(leaves) - 1))

    def to_dict(self) -> dict:
        out = {"leaves": list(self.leaves),
               "exponents": ["inf" if p == INF else p for p in self.exponents]}
        if self.is_flat:
            out["flat_p"] = "inf" if self.flat_p == INF else self.flat_p
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "TowerSpec":
        def num(v):
            if isinstance(v, str):
                if v.lower() in ("inf", "infinity"):
                    return INF
                return float(v)
            return float(v)

        try:
            leaves = tuple(int(d) for d in data["leaves"])
        except (KeyError, TypeError, ValueError) as exc:
            raise SpecValidationError("space file needs a 'leaves' list") from exc
        exponents = tuple(num(p) for p in data.get("exponents", ()))
        flat_p = data.get("flat_p")
        if flat_p is not None:
            flat_p = num(flat_p)
        return cls(leaves, exponents, flat_p)

    def describe(self) -> str:
        if self.is_flat:
            p = "inf" if self.flat_p == INF else ("%g" % self.flat_p)
            return "flat l%s dim %d" % (p, self.dim)
        return "tower leaves %s exponents %s" % (
            list(self.leaves), ["%g" % p for p in self.exponents])


def load_spec(path) -> TowerSpec:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SpecValidationError("invalid JSON in space file: %s" % exc) from exc
    return TowerSpec.from_dict(data)


def save_spec(spec: TowerSpec, path) -> None:
    with open(path, "w") as fh:
        json.dump(spec.to_dict(), fh, sort_keys=True, indent=2)
        fh.write("\n")


@dataclass(frozen=True)
class TowerVector:
    """An immutable coordinate vector tagged with its space."""

    coords: np.ndarray
    spec: TowerSpec

    def __post_init__(self):
        arr = np.array(self.coords, dtype=np.float64, copy=True).reshape(-1)
        if arr.shape[0] != self.spec.dim:
            raise DimensionMismatchError(
                "vector has %d coordinates, space has dimension %d"
                % (arr.shape[0], self.spec.dim)
            )
        arr.setflags(write=False)
        object.__setattr__(self, "coords", arr)

    def norm(self) -> float:
        starts, leaf_q, comb_p = self.spec.arrays
        return float(K.tower_norm(self.coords, starts, leaf_q, comb_p))

    def normalized(self) -> "TowerVector":
        n = self.norm()
        if n == 0.0:
            raise ZeroVectorError("cannot normalize the zero vector")
        return TowerVector(self.coords / n, self.spec)

    def block(self, k: int) -> np.ndarray:
        return self.coords[self.spec.block_slice(k)]


def norm(x: TowerVector) -> float:
    """Recursive tower norm of x."""
    return x.norm()


def project(x: TowerVector, m: int) -> TowerVector:
    """Zero every block past level m; the canonical norm-one projection."""
    if not 1 <= m <= x.spec.depth:
        raise LevelRangeError("level %d outside 1..%d" % (m, x.spec.depth))
    starts = x.spec.arrays[0]
    out = x.coords.copy()
    out[int(starts[m]):] = 0.0
    return TowerVector(out, x.spec)


def prefix_norm(x: TowerVector, m: int) -> float:
    """Norm of the first m blocks, i.e. of the projected point."""
    if not 1 <= m <= x.spec.depth:
        raise LevelRangeError("level %d outside 1..%d" % (m, x.spec.depth))
    starts, leaf_q, comb_p = x.spec.arrays
    buf = np.empty(x.spec.depth)
    K.prefix_norms(x.coords, starts, leaf_q, comb_p, buf)
    return float(buf[m - 1])


@dataclass(frozen=True)
class Projection:
    """Coordinate truncation onto the first ``level`` blocks.

    ``domain_depth`` records which tower level the projection acts on: the
    one-step restriction has domain level+1, a j-step composition has domain
    level+j, and the ambient truncation has the full depth.  The coordinate
    action is the same in every case.
    """

    spec: TowerSpec
    level: int
    domain_depth: int

    def __post_init__(self):
        if not 1 <= self.level <= self.spec.depth:
            raise LevelRangeError(
                "level %d outside 1..%d" % (self.level, self.spec.depth))
        if not self.level <= self.domain_depth <= self.spec.depth:
            raise LevelRangeError(
                "domain depth %d outside %d..%d"
                % (self.domain_depth, self.level, self.spec.depth))

    @property
    def kind(self) -> str:
        if self.domain_depth == self.spec.depth:
            return "ambient"
        if self.domain_depth == self.level + 1:
            return "step"
        return "composed"

    @property
    def domain_spec(self) -> TowerSpec:
        return self.spec.truncate(self.domain_depth)

    def apply(self, x: TowerVector) -> TowerVector:
        if x.spec.dim == self.domain_spec.dim:
            return project(TowerVector(x.coords, self.domain_spec), self.level)
        if x.spec.dim == self.spec.dim:
            return project(x, self.level)
        raise DimensionMismatchError(
            "projection domain has dimension %d, vector has %d"
            % (self.domain_spec.dim, x.spec.dim))

    def matrix(self) -> np.ndarray:
        d = self.domain_spec.dim
        keep = int(self.spec.arrays[0][self.level])
        m = np.zeros((d, d))
        for i in range(keep):
            m[i, i] = 1.0
        return m


def step_projection(spec: TowerSpec, m: int) -> Projection:
    """The one-step restriction from level m+1 onto level m."""
    if not 1 <= m < spec.depth:
        raise LevelRangeError("step level %d outside 1..%d" % (m, spec.depth - 1))
    return Projection(spec, m, m + 1)


def compose_projections(spec: TowerSpec, m: int, j: int) -> Projection:
    """The j-step composition of one-step restrictions down to level m."""
    if m < 1 or j < 1:
        raise LevelRangeError("need m >= 1 and j >= 1")
    if m + j > spec.depth:
        raise LevelRangeError(
            "m + j = %d exceeds tower depth %d" % (m + j, spec.depth))
    return Projection(spec, m, m + j)


def ambient_projection(spec: TowerSpec, m: int) -> Projection:
    """Truncation of the full tower onto level m."""
    return Projection(spec, m, spec.depth)


def random_sphere_point(spec: TowerSpec, seed) -> TowerVector:
    """Deterministic unit vector: seeded gaussian coordinates, normalized."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(spec.dim)
    v = TowerVector(x, spec)
    return v.normalized()


def sphere_sampler(spec: TowerSpec, seed):
    """Stream of independent unit vectors from one seeded generator."""
    rng = np.random.default_rng(seed)

    def draw():
        while True:
            x = rng.standard_normal(spec.dim)
            n = K.tower_norm(x, *spec.arrays)
            if n > 0.0:
                return TowerVector(x / n, spec)

    return draw
