"""Numerical radius, numerical-range sampling, the projection-compressed
radius and the projected-radius sequences.

The inner sup over norming functionals is evaluated exactly from the
closed forms in the duality module, so every optimization here runs over
the unit sphere only.  Absolute values are handled by optimizing both
signs of the pairing, which avoids a kink at zero crossings.  All values
returned are certified lower bounds attained by the reported witness.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .errors import LevelRangeError
from .operators import (
    Budget,
    DEFAULT_BUDGET,
    Operator,
    compose_with_projection,
    embed,
    perturbation_bank,
    start_bank,
)
from .duality import Functional, norming_functional, norming_sup
from .spaces import TowerSpec, TowerVector, sphere_sampler


@dataclass(frozen=True)
class StatePair:
    """A unit vector with the realized sup over its norming functionals.

    ``functional`` is filled on smooth specs where the norming functional
    is unique; on flat non-smooth specs only the realized value is kept.
    """

    x: TowerVector
    fvalue: float
    functional: Functional = None


@dataclass(frozen=True)
class RadiusEstimate:
    """A lower-bound estimate of a numerical radius with provenance."""

    value: float
    witness: StatePair
    restarts: int
    iterations: int
    seed: int
    tol: float
    level: int = None  # compression level attaining the max, when applicable

    def to_dict(self) -> dict:
        out = {
            "value": self.value,
            "witness": {
                "coords": self.witness.x.coords.tolist(),
                "fvalue": self.witness.fvalue,
                "functional": (self.witness.functional.coords.tolist()
                               if self.witness.functional is not None else None),
            },
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


def _make_state(t: Operator, coords: np.ndarray) -> StatePair:
    x = TowerVector(coords, t.spec)
    tx = TowerVector(t.matrix @ coords, t.spec)
    val = max(norming_sup(x, tx), norming_sup(x, TowerVector(-tx.coords, t.spec)))
    f = norming_functional(x) if t.spec.is_smooth else None
    return StatePair(x, float(val), f)


def _radius_value(t: Operator, budget: Budget, tag: int, warm=None):
    spec = t.spec
    starts, leaf_q, comb_p = spec.arrays
    pts = start_bank(spec, budget, tag=tag, warm=warm)
    pert = perturbation_bank(spec, budget, tag=tag + 1)
    val, wit, evals = K.radius_ascent(
        t.matrix, starts, leaf_q, comb_p, spec.kind, pts, pert,
        budget.iterations, 0.25, budget.step_floor)
    return float(val), wit, pts.shape[0], int(evals)


def numerical_radius(t: Operator, budget: Budget = None) -> RadiusEstimate:
    """Largest |f(Tx)| over unit states, by multistart compass ascent."""
    if budget is None:
        budget = DEFAULT_BUDGET
    val, wit, nstarts, evals = _radius_value(t, budget, tag=21)
    return RadiusEstimate(val, _make_state(t, wit), nstarts, evals,
                          budget.seed, budget.tol)


def sample_numerical_range(t: Operator, n_samples: int, seed) -> np.ndarray:
    """Realized pairing values f(Tx) at sampled unit states.

    At non-smooth points the maximal member of the norming set is used, so
    each value is attained by an actual state.
    """
    draw = sphere_sampler(t.spec, seed)
    out = np.empty(n_samples)
    for i in range(n_samples):
        x = draw()
        tx = TowerVector(t.matrix @ x.coords, t.spec)
        out[i] = norming_sup(x, tx)
    return out


def modified_radius(l: Operator, ambient: TowerSpec,
                    budget: Budget = None) -> RadiusEstimate:
    """Compressed radius: best level-j compression of l over ambient states.

    l lives on a truncation of ``ambient``; for every level j up to l's
    depth the operator is compressed to (truncate to j) o l o (truncate to
    j) inside the full tower and the radius of the compression is estimated
    over the ambient sphere.  Returns the max over levels, reporting the
    smallest level attaining it within tolerance.
    """
    if budget is None:
        budget = DEFAULT_BUDGET
    m = l.spec.depth
    if ambient.truncate(m) != l.spec:
        raise LevelRangeError(
            "operator spec %s is not the depth-%d truncation of %s"
            % (l.spec.describe(), m, ambient.describe()))
    lpad = embed(l, ambient) if ambient.depth > m else l
    starts_arr = ambient.arrays[0]
    per_level = []
    for j in range(1, m + 1):
        cut = int(starts_arr[j])
        mat = np.zeros_like(lpad.matrix)
        mat[:cut, :cut] = lpad.matrix[:cut, :cut]
        comp = Operator(mat, ambient)
        val, wit, nstarts, evals = _radius_value(comp, budget, tag=30 + j)
        per_level.append((val, wit, nstarts, evals))
    best = max(v for v, _, _, _ in per_level)
    tol2 = 2.0 * budget.tol
    # value is the max over levels; the reported level is the smallest one
    # attaining it within tolerance, whose witness realizes at least best - 2 tol
    for j, (val, wit, nstarts, evals) in enumerate(per_level, start=1):
        if val >= best - tol2:
            cut = int(starts_arr[j])
            mat = np.zeros_like(lpad.matrix)
            mat[:cut, :cut] = lpad.matrix[:cut, :cut]
            comp = Operator(mat, ambient)
            return RadiusEstimate(best, _make_state(comp, wit), nstarts, evals,
                                  budget.seed, budget.tol, level=j)
    raise AssertionError("unreachable: max not attained")


def projection_radius_sequence(l: Operator, ambient: TowerSpec, j_max: int,
                               budget: Budget = None) -> list:
    """Radii of l composed with deeper and deeper truncations.

    Term j is the radius of l o (truncate to m) on the level-(m+j) space,
    for j = 0..j_max.  Each term is warm-started from the previous witness
    padded with zeros; padding preserves the realized value, so the
    estimated sequence is nondecreasing by construction, matching the
    mathematical monotonicity of the true sequence.
    """
    if budget is None:
        budget = DEFAULT_BUDGET
    m = l.spec.depth
    if j_max < 0:
        raise LevelRangeError("need j_max >= 0")
    if m + j_max > ambient.depth:
        raise LevelRangeError(
            "m + j_max = %d exceeds tower depth %d" % (m + j_max, ambient.depth))
    out = []
    warm = None
    for j in range(j_max + 1):
        comp = compose_with_projection(l, ambient, j)
        d = comp.spec.dim
        warm_rows = None
        if warm is not None:
            wr = np.zeros(d)
            wr[: warm.shape[0]] = warm
            warm_rows = wr[None, :]
        spec = comp.spec
        starts, leaf_q, comb_p = spec.arrays
        pts = start_bank(spec, budget, tag=40 + j, warm=warm_rows)
        pert = perturbation_bank(spec, budget, tag=90 + j)
        val, wit, evals = K.radius_ascent(
            comp.matrix, starts, leaf_q, comb_p, spec.kind, pts, pert,
            budget.iterations, 0.25, budget.step_floor)
        out.append(RadiusEstimate(float(val), _make_state(comp, wit),
                                  pts.shape[0], int(evals),
                                  budget.seed, budget.tol, level=m + j))
        warm = wit
    return out


def projection_radius_limit(l: Operator, ambient: TowerSpec,
                            budget: Budget = None) -> RadiusEstimate:
    """Radius of l composed with the ambient truncation onto its level.

    Estimated directly on the full tower, independently of the chained
    sequence estimates; on a finite tower it targets the same operator as
    the deepest sequence term, so the two must agree within tolerance.
    """
    if budget is None:
        budget = DEFAULT_BUDGET
    m = l.spec.depth
    comp = compose_with_projection(l, ambient, ambient.depth - m)
    val, wit, nstarts, evals = _radius_value(comp, budget, tag=77)
    return RadiusEstimate(val, _make_state(comp, wit), nstarts, evals,
                          budget.seed, budget.tol, level=ambient.depth)
