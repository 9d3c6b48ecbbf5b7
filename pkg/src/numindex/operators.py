"""Dense operators on tower coordinates and operator-norm estimation.

The p -> p operator norm has exact closed forms on the flat p = 1, 2, inf
spaces (max column sum, largest singular value via power iteration, max row
sum).  Everywhere else the norm is estimated by multistart subgradient
ascent over the unit sphere; the estimate is a certified lower bound with
the attaining witness reported alongside the optimizer provenance.
"""

import json
from dataclasses import dataclass, replace

import numpy as np

from . import _kernels as K
from .errors import DimensionMismatchError, LevelRangeError, SpecValidationError
from .spaces import TowerSpec, TowerVector

INF = np.inf


@dataclass(frozen=True)
class Budget:
    """Multistart effort knobs shared by every estimator.

    ``restarts`` counts the random starts added on top of the structured
    ones (axis vectors, sign vertices on flat sup-norm spaces, warm starts);
    ``iterations`` caps objective evaluations per start; ``tol`` is the
    single-estimate tolerance, with the compass step floor tied to it.
    """

    restarts: int = 64
    iterations: int = 5000
    tol: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.restarts < 0 or self.iterations < 1:
            raise SpecValidationError("budget must have restarts >= 0, iterations >= 1")

    @property
    def step_floor(self) -> float:
        return max(1e-8, 10.0 * self.tol)

    def with_seed(self, seed) -> "Budget":
        return replace(self, seed=seed)


DEFAULT_BUDGET = Budget()


@dataclass(frozen=True)
class Operator:
    """A dense matrix acting on the coordinates of one tower."""

    matrix: np.ndarray
    spec: TowerSpec

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.float64, copy=True)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionMismatchError("operator matrix must be square")
        if m.shape[0] != self.spec.dim:
            raise DimensionMismatchError(
                "matrix is %dx%d, space has dimension %d"
                % (m.shape[0], m.shape[1], self.spec.dim))
        if not np.all(np.isfinite(m)):
            raise SpecValidationError("operator entries must be finite")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def __call__(self, x: TowerVector) -> TowerVector:
        return apply(self, x)

    def to_dict(self) -> dict:
        return {"dim": self.spec.dim, "rows": self.matrix.tolist()}

    @classmethod
    def from_dict(cls, data: dict, spec: TowerSpec) -> "Operator":
        try:
            rows = np.asarray(data["rows"], dtype=np.float64)
            dim = int(data["dim"])
        except (KeyError, TypeError, ValueError) as exc:
            raise SpecValidationError(
                "operator file needs integer 'dim' and a 'rows' matrix") from exc
        if rows.shape != (dim, dim):
            raise SpecValidationError(
                "'rows' must be a %dx%d matrix" % (dim, dim))
        return cls(rows, spec)


def load_operator(path, spec: TowerSpec) -> Operator:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SpecValidationError("invalid JSON in operator file: %s" % exc) from exc
    return Operator.from_dict(data, spec)


def save_operator(op: Operator, path) -> None:
    with open(path, "w") as fh:
        json.dump(op.to_dict(), fh, sort_keys=True)
        fh.write("\n")


def identity(spec: TowerSpec) -> Operator:
    return Operator(np.eye(spec.dim), spec)


def apply(t: Operator, x: TowerVector) -> TowerVector:
    if t.spec != x.spec:
        raise DimensionMismatchError("operator and vector specs differ")
    return TowerVector(t.matrix @ x.coords, x.spec)


@dataclass(frozen=True)
class NormEstimate:
    """A certified lower bound on the operator norm with its witness."""

    value: float
    witness: TowerVector
    method: str
    restarts: int
    iterations: int
    seed: int
    tol: float

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "witness": self.witness.coords.tolist(),
            "method": self.method,
            "provenance": {
                "restarts": self.restarts,
                "iterations": self.iterations,
                "seed": self.seed,
                "tol": self.tol,
            },
        }


def start_bank(spec: TowerSpec, budget: Budget, tag: int = 0,
               warm=None) -> np.ndarray:
    """Deterministic multistart bank: structured starts then seeded random.

    The objectives optimized here are symmetric under x -> -x, so only one
    representative per antipodal pair is generated.  Extending ``restarts``
    appends rows without changing earlier ones.
    """
    d = spec.dim
    rows = []
    if warm is not None:
        for w in np.atleast_2d(np.asarray(warm, dtype=np.float64)):
            rows.append(w)
    rows.extend(np.eye(d))
    if spec.kind == K.KIND_LINF and d <= 8:
        for bits in range(2 ** (d - 1)):
            sv = np.ones(d)
            for i in range(d - 1):
                if (bits >> i) & 1:
                    sv[i + 1] = -1.0
            rows.append(sv)
    rng = np.random.default_rng(np.random.SeedSequence([budget.seed, tag]))
    if budget.restarts:
        rows.extend(rng.standard_normal((budget.restarts, d)))
    return np.ascontiguousarray(np.array(rows))


def perturbation_bank(spec: TowerSpec, budget: Budget, tag: int = 1) -> np.ndarray:
    if spec.kind == K.KIND_SMOOTH:
        return np.zeros((1, spec.dim))
    rng = np.random.default_rng(np.random.SeedSequence([budget.seed, tag, 977]))
    return rng.standard_normal((64, spec.dim))


def operator_norm(t: Operator, budget: Budget = None, method: str = "auto") -> NormEstimate:
    """Estimate the operator norm of t on its space.

    method "auto" picks the closed form on flat p in {1, 2, inf} and the
    multistart ascent otherwise; "ascent" forces the optimizer (useful to
    cross-check the closed forms); "exact" requires a closed form.
    """
    if budget is None:
        budget = DEFAULT_BUDGET
    if method not in ("auto", "ascent", "exact"):
        raise ValueError("method must be auto|ascent|exact")
    spec = t.spec
    d = spec.dim
    flat_p = spec.flat_p if spec.is_flat else None
    if method != "ascent" and flat_p in (1.0, 2.0, INF):
        if flat_p == 1.0:
            value, arg = K.opnorm_l1(t.matrix)
            w = np.zeros(d)
            w[arg] = 1.0
            return NormEstimate(float(value), TowerVector(w, spec),
                                "max-column-sum", 0, 1, budget.seed, budget.tol)
        if flat_p == INF:
            value, arg = K.opnorm_linf(t.matrix)
            w = np.sign(t.matrix[arg])
            w[w == 0.0] = 1.0
            return NormEstimate(float(value), TowerVector(w, spec),
                                "max-row-sum", 0, 1, budget.seed, budget.tol)
        value, wit, it = K.opnorm_l2_power(t.matrix, 1e-10, max(50, budget.iterations))
        return NormEstimate(float(value), TowerVector(wit, spec),
                            "power-iteration", 1, int(it), budget.seed, budget.tol)
    if method == "exact":
        raise SpecValidationError(
            "no closed-form operator norm on %s" % spec.describe())
    starts, leaf_q, comb_p = spec.arrays
    pts = start_bank(spec, budget, tag=11)
    pert = perturbation_bank(spec, budget, tag=12)
    value, wit, evals = K.norm_ascent(
        t.matrix, starts, leaf_q, comb_p, spec.kind, pts, pert,
        budget.iterations, 0.25, budget.step_floor)
    return NormEstimate(float(value), TowerVector(wit, spec), "multistart-ascent",
                        pts.shape[0], int(evals), budget.seed, budget.tol)


def embed(l: Operator, ambient: TowerSpec) -> Operator:
    """Pad an operator on a truncation of ``ambient`` with zero blocks."""
    m = l.spec.depth
    if ambient.truncate(m) != l.spec:
        raise LevelRangeError(
            "operator spec %s is not the depth-%d truncation of %s"
            % (l.spec.describe(), m, ambient.describe()))
    d = ambient.dim
    k = l.spec.dim
    out = np.zeros((d, d))
    out[:k, :k] = l.matrix
    return Operator(out, ambient)


def compose_with_projection(l: Operator, ambient: TowerSpec, j: int) -> Operator:
    """The operator l applied after the j-step truncation, on level m+j.

    l must live on the depth-m truncation of ``ambient``; the result acts on
    the depth-(m+j) truncation, first zeroing blocks past m, then applying l.
    """
    m = l.spec.depth
    if j < 0:
        raise LevelRangeError("need j >= 0")
    if m + j > ambient.depth:
        raise LevelRangeError(
            "m + j = %d exceeds tower depth %d" % (m + j, ambient.depth))
    if ambient.truncate(m) != l.spec:
        raise LevelRangeError(
            "operator spec %s is not the depth-%d truncation of %s"
            % (l.spec.describe(), m, ambient.describe()))
    target = ambient.truncate(m + j)
    if j == 0:
        return l
    padded = embed(l, target)
    cut = int(target.arrays[0][m])
    mat = padded.matrix.copy()
    mat[:, cut:] = 0.0
    return Operator(mat, target)


def random_operator(spec: TowerSpec, seed, normalize: bool = False,
                    budget: Budget = None) -> Operator:
    """Seeded standard-normal entries; optionally rescaled to unit norm."""
    rng = np.random.default_rng(seed)
    mat = rng.standard_normal((spec.dim, spec.dim))
    op = Operator(mat, spec)
    if normalize:
        est = operator_norm(op, budget)
        if est.value == 0.0:
            raise SpecValidationError("cannot normalize an operator with zero norm")
        op = Operator(mat / est.value, spec)
    return op
