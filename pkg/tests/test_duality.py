import numpy as np
import pytest

from numindex.duality import (
    b_constant,
    certify_CC,
    dual_norm,
    Functional,
    norming_functional,
    norming_set,
    norming_sup,
    restrict,
)
from numindex.errors import (
    DegenerateSupportError,
    NonSmoothSpecError,
    ZeroVectorError,
)
from numindex.spaces import TowerSpec, TowerVector, project, sphere_sampler

INF = float("inf")


def fd_gradient(x: TowerVector, h=1e-6):
    g = np.empty(x.spec.dim)
    for i in range(x.spec.dim):
        up = x.coords.copy()
        dn = x.coords.copy()
        up[i] += h
        dn[i] -= h
        g[i] = (TowerVector(up, x.spec).norm()
                - TowerVector(dn, x.spec).norm()) / (2 * h)
    return g


# ---------------------------------------------------------------------------
# norming functionals (smooth)
# ---------------------------------------------------------------------------

def test_unit_vector_case():
    spec = TowerSpec.flat(3, 3.0)
    x = TowerVector([1.0, 0.0, 0.0], spec)
    f = norming_functional(x)
    assert f.coords.tolist() == [1.0, 0.0, 0.0]


def test_hilbert_self_duality():
    spec = TowerSpec.flat(2, 2.0)
    x = TowerVector([0.6, 0.8], spec)
    f = norming_functional(x)
    assert np.allclose(f.coords, x.coords, atol=1e-15)


def test_flat_closed_form():
    p = 2.5
    spec = TowerSpec.flat(4, p)
    rng = np.random.default_rng(0)
    for _ in range(20):
        c = rng.standard_normal(4)
        x = TowerVector(c, spec)
        f = norming_functional(x)
        n = x.norm()
        expected = np.abs(c) ** (p - 1) * np.sign(c) / n ** (p - 1)
        assert np.allclose(f.coords, expected, atol=1e-12)


def test_norming_against_fd_gradient_two_level():
    spec = TowerSpec((2, 1), (2.5,))
    draw = sphere_sampler(spec, 1)
    for _ in range(30):
        x = draw()
        f = norming_functional(x)
        assert f(x) == pytest.approx(1.0, abs=1e-10)
        assert dual_norm(f) == pytest.approx(1.0, abs=1e-10)
        g = fd_gradient(x)
        scale = max(1.0, float(np.max(np.abs(g))))
        assert np.max(np.abs(f.coords - g)) / scale < 1e-5


def test_norming_zero_blocks():
    spec = TowerSpec((2, 2, 1), (2.0, 2.5))
    x = TowerVector([0.0, 0.0, 1.0, -1.0, 0.5], spec)
    f = norming_functional(x)
    assert np.all(f.coords[:2] == 0.0)
    assert f(x) == pytest.approx(x.norm(), abs=1e-12)
    assert dual_norm(f) == pytest.approx(1.0, abs=1e-12)


def test_norming_errors():
    with pytest.raises(ZeroVectorError):
        norming_functional(TowerVector(np.zeros(2), TowerSpec.flat(2, 2.0)))
    with pytest.raises(NonSmoothSpecError):
        norming_functional(TowerVector([1.0, 0.0], TowerSpec.flat(2, 1.0)))
    with pytest.raises(NonSmoothSpecError):
        norming_functional(TowerVector([1.0, 0.0], TowerSpec.flat(2, INF)))


# ---------------------------------------------------------------------------
# norming_sup
# ---------------------------------------------------------------------------

def test_sup_l1_off_support_bruteforce():
    spec = TowerSpec.flat(2, 1.0)
    x = TowerVector([1.0, 0.0], spec)
    v = TowerVector([0.0, 1.0], spec)
    # oracle: the face of the dual ball is {(1, a): |a| <= 1}
    grid = [max(1.0 * 0.0 + a * 1.0, -INF) for a in np.linspace(-1, 1, 2001)]
    assert norming_sup(x, v) == pytest.approx(max(grid), abs=1e-12)
    assert norming_sup(x, v) == 1.0


def test_sup_smooth_orthogonal():
    spec = TowerSpec.flat(2, 2.0)
    x = TowerVector([1.0, 0.0], spec)
    v = TowerVector([0.0, 1.0], spec)
    assert norming_sup(x, v) == 0.0


def test_sup_linf_argmax_enumeration():
    spec = TowerSpec.flat(2, INF)
    x = TowerVector([1.0, 1.0], spec)
    v = TowerVector([2.0, -3.0], spec)
    # both coordinates attain the max with sign +1
    assert norming_sup(x, v) == pytest.approx(max(2.0, -3.0), abs=0.0)


def test_sup_self_pairing_all_kinds():
    rng = np.random.default_rng(2)
    for spec in (TowerSpec.flat(3, 1.0), TowerSpec.flat(3, INF),
                 TowerSpec.flat(3, 1.5), TowerSpec((2, 2, 1), (2.0, 2.5))):
        for _ in range(50):
            c = rng.standard_normal(spec.dim)
            if rng.uniform() < 0.4:
                c[rng.integers(0, spec.dim)] = 0.0
            x = TowerVector(c, spec)
            if x.norm() == 0.0:
                continue
            assert norming_sup(x, x) == pytest.approx(x.norm(), abs=1e-10)


def test_sup_scale_invariance_in_x():
    spec = TowerSpec.flat(3, 1.0)
    rng = np.random.default_rng(3)
    for _ in range(20):
        x = TowerVector(rng.standard_normal(3), spec)
        v = TowerVector(rng.standard_normal(3), spec)
        a = norming_sup(x, v)
        b = norming_sup(TowerVector(2.5 * x.coords, spec), v)
        assert a == pytest.approx(b, abs=1e-13)


def test_sup_zero_x_rejected():
    spec = TowerSpec.flat(2, 1.0)
    with pytest.raises(ZeroVectorError):
        norming_sup(TowerVector(np.zeros(2), spec),
                    TowerVector([1.0, 0.0], spec))


# ---------------------------------------------------------------------------
# dual norms
# ---------------------------------------------------------------------------

def test_dual_norm_values():
    assert dual_norm(Functional([3.0, 4.0], TowerSpec.flat(2, 2.0))) == \
        pytest.approx(5.0, abs=1e-15)
    assert dual_norm(Functional([2.0, -5.0], TowerSpec.flat(2, 1.0))) == 5.0
    assert dual_norm(Functional([2.0, -5.0], TowerSpec.flat(2, INF))) == 7.0


def test_hoelder_inequality_sampled():
    rng = np.random.default_rng(4)
    specs = [TowerSpec.flat(4, 1.5), TowerSpec.flat(4, 1.0),
             TowerSpec.flat(4, INF), TowerSpec((2, 2), (3.0,))]
    for spec in specs:
        for _ in range(250):
            f = Functional(rng.standard_normal(spec.dim), spec)
            x = TowerVector(rng.standard_normal(spec.dim), spec)
            assert abs(f(x)) <= dual_norm(f) * x.norm() + 1e-12


def test_hoelder_equality_at_norming_configuration():
    spec = TowerSpec((2, 1), (2.5,))
    draw = sphere_sampler(spec, 5)
    for _ in range(20):
        x = draw()
        f = norming_functional(x)
        assert abs(f(x)) == pytest.approx(dual_norm(f) * x.norm(), abs=1e-10)


# ---------------------------------------------------------------------------
# b-constants
# ---------------------------------------------------------------------------

def test_b_constant_flat_example():
    spec = TowerSpec.uniform([1, 1], 2.0)
    x = TowerVector(np.array([1.0, 1.0]) / np.sqrt(2.0), spec)
    assert b_constant(x, 1).value == pytest.approx(np.sqrt(2.0), rel=1e-12)


def test_b_constant_supported_vector():
    spec = TowerSpec.uniform([1, 1, 1], 1.5)
    x = TowerVector([0.7, -0.3, 0.0], spec)
    assert b_constant(x, 2).value == pytest.approx(1.0, abs=1e-14)


def test_b_constant_flat_ratio_formula():
    p = 1.5
    spec = TowerSpec.uniform([1] * 5, p)
    draw = sphere_sampler(spec, 6)
    for _ in range(20):
        x = draw()
        for m in range(1, 5):
            expected = (x.norm() ** (p - 1)
                        / project(x, m).norm() ** (p - 1))
            assert b_constant(x, m).value == pytest.approx(expected, rel=1e-12)


def test_b_constant_certifies_restriction():
    spec = TowerSpec((2, 1), (2.5,))
    draw = sphere_sampler(spec, 7)
    for _ in range(50):
        x = draw()
        b = b_constant(x, 1)
        f = norming_functional(x)
        fr = restrict(f, 1)
        target = project(x, 1)
        assert b.value * float(fr.coords @ x.coords) == pytest.approx(
            target.norm(), abs=1e-10)
        # coordinatewise oracle: the norming functional of the projection
        direct = norming_functional(TowerVector(target.coords[:2],
                                                spec.truncate(1)))
        assert np.allclose(b.value * fr.coords[:2], direct.coords, atol=1e-10)
        assert b.value >= 1.0 - 1e-12


def test_b_constant_degenerate_support():
    spec = TowerSpec.uniform([1, 1, 1], 2.0)
    x = TowerVector([0.0, 0.0, 1.0], spec)
    with pytest.raises(DegenerateSupportError):
        b_constant(x, 1)
    with pytest.raises(NonSmoothSpecError):
        b_constant(TowerVector([1.0, 0.0], TowerSpec.flat(2, 1.0)), 1)


# ---------------------------------------------------------------------------
# CC / LCC certification
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("spec", [
    TowerSpec.uniform([1] * 4, 1.5),
    TowerSpec.uniform([1] * 4, 2.0),
    TowerSpec.uniform([1] * 4, 3.0),
    TowerSpec((2, 2, 1), (2.0, 3.0)),
])
def test_certify_cc_smooth_specs(spec):
    rep = certify_CC(spec, 200, 1e-9, seed=11)
    assert rep.passed
    assert rep.max_violation < 1e-9
    assert rep.min_b_at_unit >= 1.0 - 1e-12


def test_certify_lcc_mode():
    spec = TowerSpec((2, 2, 1), (2.0, 2.5))
    rep = certify_CC(spec, 150, 1e-9, seed=12, mode="lcc")
    assert rep.passed
    assert rep.checks == 300  # one batch of samples per interior level


def test_certify_axis_vector_exact():
    spec = TowerSpec.uniform([1] * 3, 2.0)
    x = TowerVector([1.0, 0.0, 0.0], spec)
    b = b_constant(x, 1)
    f = norming_functional(x)
    fr = restrict(f, 1)
    assert b.value == 1.0
    assert b.value * float(fr.coords @ x.coords) == project(x, 1).norm()


def test_certify_rejects_nonsmooth():
    with pytest.raises(NonSmoothSpecError):
        certify_CC(TowerSpec.flat(3, 1.0), 10, 1e-9)


def test_certify_flat_single_level_vacuous():
    rep = certify_CC(TowerSpec.flat(3, 2.0), 10, 1e-9)
    assert rep.passed and rep.checks == 0


# ---------------------------------------------------------------------------
# norming sets
# ---------------------------------------------------------------------------

def test_norming_set_structures_and_members():
    cases = [
        (TowerSpec.flat(3, 1.0), [0.5, -0.5, 0.0], "l1-face"),
        (TowerSpec.flat(3, INF), [1.0, -1.0, 0.2], "sup-face"),
        (TowerSpec.flat(3, 2.0), [1.0, 2.0, -1.0], "smooth"),
    ]
    for spec, coords, structure in cases:
        x = TowerVector(coords, spec)
        ns = norming_set(x)
        assert ns.structure == structure
        xhat = x.normalized()
        for f in ns.sample_members(10, seed=13):
            assert f(xhat) == pytest.approx(1.0, abs=1e-12)
            assert dual_norm(f) == pytest.approx(1.0, abs=1e-12)


def test_norming_set_sup_matches_norming_sup():
    spec = TowerSpec.flat(3, 1.0)
    rng = np.random.default_rng(14)
    for _ in range(20):
        x = TowerVector(rng.standard_normal(3), spec)
        v = TowerVector(rng.standard_normal(3), spec)
        assert norming_set(x).sup(v) == norming_sup(x, v)
