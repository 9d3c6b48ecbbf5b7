"""Acceptance suite: one test per criterion, run with ``pytest -v``.

Each test prints a summary line with the measured worst cases so the run
log shows the margins, not just pass/fail.  Budgets are sized for a desk
machine; the whole module stays under ten minutes.
"""

import json
import subprocess
import sys
import time

import numpy as np
import pytest

import conftest

from numindex.duality import certify_CC, dual_norm, norming_functional
from numindex.index import estimate_index, limit_scan, scan_envelope
from numindex.operators import (
    Budget,
    Operator,
    compose_with_projection,
    identity,
    operator_norm,
    random_operator,
    save_operator,
)
from numindex.radius import (
    modified_radius,
    numerical_radius,
    projection_radius_limit,
    projection_radius_sequence,
)
from numindex.spaces import (
    TowerSpec,
    TowerVector,
    ambient_projection,
    compose_projections,
    project,
    save_spec,
    sphere_sampler,
)
from numindex.verify import radius_bruteforce

INF = float("inf")

SMOOTH_FLAT_SPECS = [TowerSpec.flat(4, p) for p in (1.5, 2.0, 3.0)]
MIXED_TOWER = TowerSpec((2, 2, 1), (2.0, 2.5))
SMOOTH_TOWERS = [TowerSpec.uniform([1] * 4, p) for p in (1.5, 2.0, 3.0)]

RADIUS_BUDGET = Budget(restarts=24, iterations=4000, tol=1e-8, seed=0)
TIGHT_BUDGET = Budget(restarts=32, iterations=5000, tol=1e-8, seed=0)


def report(num, text):
    line = "ACCEPTANCE %02d %s" % (num, text)
    print(line)
    conftest.ACCEPTANCE_LINES.append(line)


def test_criterion_01_duality_correctness():
    specs = SMOOTH_FLAT_SPECS + [MIXED_TOWER]
    per_spec = 125
    worst_pair = worst_dual = worst_grad = 0.0
    h = 1e-6
    for si, spec in enumerate(specs):
        draw = sphere_sampler(spec, (100, si))
        for _ in range(per_spec):
            x = draw()
            f = norming_functional(x)
            worst_pair = max(worst_pair, abs(f(x) - x.norm()))
            worst_dual = max(worst_dual, abs(dual_norm(f) - 1.0))
            g = np.empty(spec.dim)
            for i in range(spec.dim):
                up = x.coords.copy()
                dn = x.coords.copy()
                up[i] += h
                dn[i] -= h
                g[i] = (TowerVector(up, spec).norm()
                        - TowerVector(dn, spec).norm()) / (2 * h)
            scale = max(1e-30, float(np.max(np.abs(g))))
            worst_grad = max(worst_grad, float(np.max(np.abs(f.coords - g))) / scale)
    ok = worst_pair < 1e-10 and worst_dual < 1e-10 and worst_grad < 1e-5
    report(1, "duality: 500 pts, pairing %.1e, dual %.1e, gradient %.1e -> %s"
           % (worst_pair, worst_dual, worst_grad, "PASS" if ok else "FAIL"))
    assert worst_pair < 1e-10
    assert worst_dual < 1e-10
    assert worst_grad < 1e-5


def test_criterion_02_cc_lcc_certification():
    specs = SMOOTH_TOWERS + [MIXED_TOWER]
    worst = 0.0
    min_b = INF
    for si, spec in enumerate(specs):
        for mode in ("cc", "lcc"):
            rep = certify_CC(spec, 125, 1e-9, seed=(200, si), mode=mode)
            assert rep.passed, rep.summary()
            worst = max(worst, rep.max_violation)
            min_b = min(min_b, rep.min_b_at_unit)
    ok = worst < 1e-9 and min_b >= 1.0 - 1e-12
    report(2, "CC/LCC: max violation %.1e, min b %.12f -> %s"
           % (worst, min_b, "PASS" if ok else "FAIL"))
    assert worst < 1e-9
    assert min_b >= 1.0 - 1e-12


def test_criterion_03_radius_anchors():
    every_spec = (SMOOTH_FLAT_SPECS + SMOOTH_TOWERS + [MIXED_TOWER]
                  + [TowerSpec.flat(2, 1.0), TowerSpec.flat(3, 1.0),
                     TowerSpec.flat(2, INF), TowerSpec.flat(3, INF)])
    worst_id = 0.0
    for spec in every_spec:
        worst_id = max(worst_id,
                       abs(numerical_radius(identity(spec), RADIUS_BUDGET).value - 1.0))
    rot = Operator([[0.0, -1.0], [1.0, 0.0]], TowerSpec.flat(2, 2.0))
    rot_val = numerical_radius(rot, RADIUS_BUDGET).value
    shift = Operator([[0.0, 0.0], [1.0, 0.0]], TowerSpec.flat(2, 1.0))
    shift_val = numerical_radius(shift, RADIUS_BUDGET).value
    shift_oracle = radius_bruteforce(shift, grid=24)
    ok = worst_id < 1e-9 and rot_val <= 1e-9 and abs(shift_val - shift_oracle) < 1e-6
    report(3, "anchors: identity err %.1e, rotation %.1e, shift vs oracle %.1e -> %s"
           % (worst_id, rot_val, abs(shift_val - shift_oracle),
              "PASS" if ok else "FAIL"))
    assert worst_id < 1e-9
    assert rot_val <= 1e-9
    assert abs(shift_val - shift_oracle) < 1e-6
    assert shift_val == pytest.approx(1.0, abs=1e-6)


def test_criterion_04_bruteforce_equivalence():
    worst = 0.0
    count = 0
    for p in (1.0, INF):
        for d in (2, 3):
            spec = TowerSpec.flat(d, p)
            for k in range(13):
                if count == 50:
                    break
                t = random_operator(spec, (400, d, 0 if p == 1.0 else 1, k))
                est = numerical_radius(t, TIGHT_BUDGET)
                oracle = radius_bruteforce(t, grid=16)
                worst = max(worst, abs(est.value - oracle))
                count += 1
    ok = worst < 1e-4
    report(4, "brute force: %d operators, worst gap %.2e -> %s"
           % (count, worst, "PASS" if ok else "FAIL"))
    assert count == 50
    assert worst < 1e-4


def test_criterion_05_compressed_equals_radius():
    worst = 0.0
    for p in (1.5, 2.0):
        amb = TowerSpec.uniform([1] * 4, p)
        assert certify_CC(amb, 60, 1e-9, seed=500).passed  # hypothesis gate
        sub = amb.truncate(2)
        for k in range(50):
            l = random_operator(sub, (500, int(p * 10), k), normalize=True,
                                budget=RADIUS_BUDGET)
            nu = numerical_radius(l, RADIUS_BUDGET).value
            n1 = modified_radius(l, amb, RADIUS_BUDGET).value
            worst = max(worst, abs(n1 - nu))
    ok = worst < 1e-5
    report(5, "compressed radius vs radius: 100 ops, worst |n1-nu| %.2e -> %s"
           % (worst, "PASS" if ok else "FAIL"))
    assert worst < 1e-5


def test_criterion_06_embedding_invariance():
    worst = 0.0
    for p in (1.5, 2.0):
        amb = TowerSpec.uniform([1] * 3, p)
        sub = amb.truncate(2)
        for k in range(50):
            l = random_operator(sub, (600, int(p * 10), k), normalize=True,
                                budget=RADIUS_BUDGET)
            lm = compose_with_projection(l, amb, 1)
            a = modified_radius(l, amb, RADIUS_BUDGET).value
            b = modified_radius(lm, amb, RADIUS_BUDGET).value
            worst = max(worst, abs(a - b))
    ok = worst < 2e-5
    report(6, "embedding invariance: 100 ops, worst gap %.2e -> %s"
           % (worst, "PASS" if ok else "FAIL"))
    assert worst < 2e-5


def test_criterion_07_projected_radius_machinery():
    worst_mono = worst_spread = worst_dom = worst_final = 0.0
    for p in (1.5, 2.0):
        amb = TowerSpec.uniform([1] * 5, p)
        assert certify_CC(amb, 60, 1e-9, seed=700, mode="lcc").passed
        sub = amb.truncate(2)
        for k in range(50):
            l = random_operator(sub, (700, int(p * 10), k), normalize=True,
                                budget=RADIUS_BUDGET)
            seq = projection_radius_sequence(l, amb, 3, RADIUS_BUDGET)
            vals = [e.value for e in seq]
            lim = projection_radius_limit(l, amb, RADIUS_BUDGET).value
            for a, b in zip(vals, vals[1:]):
                worst_mono = max(worst_mono, a - b)
            worst_spread = max(worst_spread, max(vals) - min(vals))
            worst_dom = max(worst_dom, max(vals) - lim)
            worst_final = max(worst_final, abs(lim - vals[-1]))
    ok = (worst_mono < 2e-5 and worst_spread < 1e-5 and worst_dom < 2e-5
          and worst_final < 2e-5)
    report(7, "projected radius: mono %.1e, spread %.1e, dominance %.1e, "
              "final %.1e -> %s" % (worst_mono, worst_spread, worst_dom,
                                    worst_final, "PASS" if ok else "FAIL"))
    assert worst_mono < 2e-5
    assert worst_spread < 1e-5
    assert worst_dom < 2e-5
    assert worst_final < 2e-5


def test_criterion_08_projection_tower_exact():
    spec = TowerSpec((2, 1, 2, 1), (2.0, 1.5, 3.0))
    rng = np.random.default_rng(800)
    exact = True
    for _ in range(200):
        x = TowerVector(rng.integers(-9, 10, 6).astype(float), spec)
        for m in range(1, 5):
            for j in range(m, 5):
                a = project(project(x, j), m).coords
                b = project(x, m).coords
                exact &= bool(np.array_equal(a, b))
    # composed projections stabilize to the ambient truncation exactly
    for m in (1, 2, 3):
        q = compose_projections(spec, m, spec.depth - m)
        qa = ambient_projection(spec, m)
        exact &= bool(np.array_equal(q.matrix(), qa.matrix()))
        for _ in range(50):
            x = TowerVector(rng.integers(-9, 10, 6).astype(float), spec)
            exact &= bool(np.array_equal(q.apply(x).coords, qa.apply(x).coords))
    report(8, "projection tower: nesting and stabilization exact -> %s"
           % ("PASS" if exact else "FAIL"))
    assert exact


def test_criterion_09_index_anchors():
    small = Budget(restarts=6, iterations=2000, tol=1e-8, seed=0)
    p2 = estimate_index(TowerSpec.flat(2, 2.0), small, seed=0)
    w = p2.witness.matrix
    skewness = float(np.max(np.abs(w + w.T)) / np.max(np.abs(w)))
    dim1_vals = [estimate_index(TowerSpec.flat(1, p), small, seed=0).value
                 for p in (1.0, 2.0, INF)]
    worst_nonsmooth = 1.0
    for p in (1.0, INF):
        for d in (2, 3):
            est = estimate_index(TowerSpec.flat(d, p), small, seed=0)
            worst_nonsmooth = min(worst_nonsmooth, est.value)
    # per-operator property backing the nonsmooth anchor
    check_budget = Budget(restarts=8, iterations=2500, tol=1e-8, seed=1)
    worst_ratio = 1.0
    for p in (1.0, INF):
        for d in (2, 3):
            spec = TowerSpec.flat(d, p)
            for k in range(250):
                t = random_operator(spec, (900, d, 0 if p == 1.0 else 1, k))
                nu = numerical_radius(t, check_budget).value
                nrm = operator_norm(t, check_budget).value
                if nrm > 0:
                    worst_ratio = min(worst_ratio, nu / nrm)
    ok = (p2.value <= 1e-6 and skewness <= 1e-3
          and all(v == 1.0 for v in dim1_vals)
          and worst_nonsmooth >= 0.98 and worst_ratio >= 1.0 - 1e-3)
    report(9, "index anchors: l2 %.1e (skewness %.1e), dim1 %s, nonsmooth min "
              "%.4f, worst nu/|T| %.6f -> %s"
           % (p2.value, skewness, dim1_vals, worst_nonsmooth, worst_ratio,
              "PASS" if ok else "FAIL"))
    assert p2.value <= 1e-6
    assert skewness <= 1e-3
    assert all(v == 1.0 for v in dim1_vals)
    assert worst_nonsmooth >= 0.98
    assert worst_ratio >= 1.0 - 1e-3


def test_criterion_10_limit_scan():
    budget = Budget(restarts=6, iterations=2000, tol=1e-5, seed=0)
    t0 = time.time()
    for p in (1.5, 2.0):
        spec = TowerSpec.uniform([1] * 4, p)
        table = limit_scan(spec, range(1, 5), budget, seed=0)
        vals = [r.index.value for r in table.rows]
        deepest = vals[-1]
        for v in vals:
            assert v >= deepest - 0.03, (p, vals)
        for k, (a, b) in enumerate(zip(vals, vals[1:]), start=1):
            assert abs(b - a) <= scan_envelope(k), (p, k, vals)
        assert table.passed, (p, [r.flag_text for r in table.rows])
        report(10, "limit scan p=%g: values %s flags %s"
               % (p, ["%.4f" % v for v in vals],
                  [r.flag_text for r in table.rows]))
    elapsed = time.time() - t0
    report(10, "limit scan: both scans in %.0fs (< 600) -> PASS" % elapsed)
    assert elapsed < 600


def test_criterion_11_cli_reproducibility(tmp_path):
    spec = TowerSpec.uniform([1, 1], 2.0)
    save_spec(spec, tmp_path / "space.json")
    save_operator(Operator([[0.0, -1.0], [1.0, 0.0]], spec),
                  tmp_path / "rot.json")
    outputs = []
    for d in ("a", "b"):
        sub = tmp_path / d
        sub.mkdir()
        res = subprocess.run(
            [sys.executable, "-m", "numindex.cli", "nu",
             "--space", str(tmp_path / "space.json"),
             "--op", str(tmp_path / "rot.json"),
             "--budget", "8", "--seed", "7", "--out", str(sub / "report.json")],
            capture_output=True, text=True, timeout=600)
        assert res.returncode == 0, res.stderr
        outputs.append((sub / "report.json").read_bytes())
    identical = outputs[0] == outputs[1]
    tower = TowerSpec.uniform([1, 1, 1], 2.0)
    save_spec(tower, tmp_path / "tower.json")
    res = subprocess.run(
        [sys.executable, "-m", "numindex.cli", "verify",
         "--space", str(tmp_path / "tower.json"), "--samples", "20",
         "--budget", "2", "--seed", "0", "--inject-fault", "wrong-exponent"],
        capture_output=True, text=True, timeout=600)
    fault_exit = res.returncode
    ok = identical and fault_exit == 1
    report(11, "CLI: byte-identical=%s, negative control exit=%d -> %s"
           % (identical, fault_exit, "PASS" if ok else "FAIL"))
    assert identical
    assert fault_exit == 1
    value = json.loads(outputs[0])["value"]
    assert value <= 1e-9
