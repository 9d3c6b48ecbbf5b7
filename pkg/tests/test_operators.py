import numpy as np
import pytest

from numindex.errors import (
    DimensionMismatchError,
    LevelRangeError,
    SpecValidationError,
)
from numindex.operators import (
    Budget,
    Operator,
    apply,
    compose_with_projection,
    embed,
    identity,
    operator_norm,
    random_operator,
)
from numindex.spaces import TowerSpec, TowerVector, ambient_projection

INF = float("inf")
FAST = Budget(restarts=16, iterations=3000, seed=0)


# ---------------------------------------------------------------------------
# apply
# ---------------------------------------------------------------------------

def test_apply_identity_and_zero():
    spec = TowerSpec.flat(3, 1.5)
    x = TowerVector([1.0, -2.0, 0.5], spec)
    assert np.array_equal(apply(identity(spec), x).coords, x.coords)
    z = Operator(np.zeros((3, 3)), spec)
    assert np.all(apply(z, x).coords == 0.0)


def test_apply_spec_mismatch():
    a = TowerSpec.flat(2, 2.0)
    b = TowerSpec.flat(2, 3.0)
    with pytest.raises(DimensionMismatchError):
        apply(identity(a), TowerVector([1.0, 0.0], b))


@pytest.mark.parametrize("p", [1.0, 1.5, 2.0, INF])
def test_permutation_preserves_flat_norm(p):
    spec = TowerSpec.flat(4, p)
    perm = np.eye(4)[[2, 0, 3, 1]]
    op = Operator(perm, spec)
    rng = np.random.default_rng(0)
    for _ in range(25):
        x = TowerVector(rng.standard_normal(4), spec)
        assert apply(op, x).norm() == pytest.approx(x.norm(), rel=1e-14)


def test_operator_validation():
    spec = TowerSpec.flat(2, 2.0)
    with pytest.raises(DimensionMismatchError):
        Operator(np.zeros((2, 3)), spec)
    with pytest.raises(DimensionMismatchError):
        Operator(np.zeros((3, 3)), spec)
    with pytest.raises(SpecValidationError):
        Operator(np.array([[np.nan, 0.0], [0.0, 0.0]]), spec)


# ---------------------------------------------------------------------------
# operator norms
# ---------------------------------------------------------------------------

def test_opnorm_l1_shift():
    spec = TowerSpec.flat(2, 1.0)
    t = Operator([[0.0, 0.0], [1.0, 0.0]], spec)
    est = operator_norm(t)
    # oracle: max over columns of the column absolute sum
    assert est.value == float(np.max(np.sum(np.abs(t.matrix), axis=0)))
    assert est.value == 1.0


@pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 3.0, INF])
def test_opnorm_diagonal(p):
    spec = TowerSpec.flat(2, p)
    t = Operator(np.diag([2.0, 1.0]), spec)
    assert operator_norm(t, FAST).value == pytest.approx(2.0, abs=1e-9)


def test_opnorm_l2_vs_svd_oracle():
    spec = TowerSpec.flat(2, 2.0)
    t = Operator([[0.0, 1.0], [0.0, 0.0]], spec)
    assert operator_norm(t).value == pytest.approx(1.0, abs=1e-10)
    rng = np.random.default_rng(1)
    for _ in range(20):
        m = rng.standard_normal((4, 4))
        est = operator_norm(Operator(m, TowerSpec.flat(4, 2.0)))
        assert est.value == pytest.approx(np.linalg.norm(m, 2), abs=1e-8)


@pytest.mark.parametrize("p,dim", [(1.0, 4), (2.0, 4), (INF, 4), (1.0, 8),
                                   (2.0, 8), (INF, 8)])
def test_opnorm_closed_form_vs_multistart(p, dim):
    spec = TowerSpec.flat(dim, p)
    rng = np.random.default_rng(int(dim + (10 if p == INF else p)))
    budget = Budget(restarts=24, iterations=5000, seed=3)
    for k in range(3):
        t = Operator(rng.standard_normal((dim, dim)), spec)
        exact = operator_norm(t, budget, method="auto")
        ascent = operator_norm(t, budget, method="ascent")
        assert abs(exact.value - ascent.value) < 1e-6


def test_opnorm_witness_attains_value():
    spec = TowerSpec((2, 2), (2.5,))
    t = random_operator(spec, 5)
    est = operator_norm(t, FAST)
    w = est.witness
    assert abs(w.norm() - 1.0) < 1e-12
    assert apply(t, w).norm() == pytest.approx(est.value, abs=1e-9)


def test_opnorm_identity_every_spec():
    for spec in (TowerSpec.flat(3, 1.0), TowerSpec.flat(3, INF),
                 TowerSpec.flat(3, 2.0), TowerSpec((2, 2, 1), (2.0, 2.5))):
        assert operator_norm(identity(spec), FAST).value == pytest.approx(
            1.0, abs=1e-12)


def test_opnorm_exact_method_requires_closed_form():
    spec = TowerSpec.flat(3, 1.7)
    with pytest.raises(SpecValidationError):
        operator_norm(identity(spec), FAST, method="exact")


# ---------------------------------------------------------------------------
# composition with projections
# ---------------------------------------------------------------------------

def test_compose_identity_gives_projection_matrix():
    spec = TowerSpec.uniform([1, 1, 1], 2.0)
    li = identity(spec.truncate(1))
    comp = compose_with_projection(li, spec, 2)
    assert np.array_equal(comp.matrix, ambient_projection(spec, 1).matrix())


def test_compose_fixes_subspace_vectors():
    spec = TowerSpec((2, 1, 1), (2.0, 2.5))
    sub = spec.truncate(2)
    l = random_operator(sub, 7)
    comp = compose_with_projection(l, spec, 1)
    rng = np.random.default_rng(8)
    for _ in range(20):
        c = np.zeros(4)
        c[:3] = rng.standard_normal(3)
        x = TowerVector(c, comp.spec)
        got = apply(comp, x).coords
        want = np.zeros(4)
        want[:3] = l.matrix @ c[:3]
        assert np.allclose(got, want, atol=1e-14)


def test_compose_norm_contraction():
    spec = TowerSpec.uniform([1] * 4, 1.5)
    sub = spec.truncate(2)
    budget = Budget(restarts=16, iterations=3000, seed=9)
    for k in range(5):
        l = random_operator(sub, (9, k))
        lq = compose_with_projection(l, spec, 2)
        a = operator_norm(lq, budget, method="ascent").value
        b = operator_norm(l, budget, method="ascent").value
        assert a <= b + 2e-8


def test_compose_level_errors():
    spec = TowerSpec.uniform([1, 1, 1], 2.0)
    l = identity(spec.truncate(2))
    with pytest.raises(LevelRangeError):
        compose_with_projection(l, spec, 2)
    wrong = identity(TowerSpec.uniform([1, 1], 3.0))
    with pytest.raises(LevelRangeError):
        embed(wrong, spec)


# ---------------------------------------------------------------------------
# random operators
# ---------------------------------------------------------------------------

def test_random_operator_deterministic():
    spec = TowerSpec.flat(3, 2.0)
    a = random_operator(spec, 11)
    b = random_operator(spec, 11)
    assert np.array_equal(a.matrix, b.matrix)
    c = random_operator(spec, 12)
    assert not np.array_equal(a.matrix, c.matrix)


def test_random_operator_normalized():
    for spec in (TowerSpec.flat(3, 2.0), TowerSpec((2, 2), (2.5,))):
        t = random_operator(spec, 13, normalize=True, budget=FAST)
        re_est = operator_norm(t, FAST)
        assert abs(re_est.value - 1.0) < 1e-6


def test_random_operator_mean_entry():
    spec = TowerSpec.flat(2, 2.0)
    total = 0.0
    n = 1000
    for k in range(n):
        total += float(np.mean(random_operator(spec, (17, k)).matrix))
    assert abs(total / n) < 0.05
