"""Hot numeric kernels.

Every function here is written against plain float64/int64 arrays so the same
source runs either numba-jitted or as ordinary Python.  The backend is chosen
once at import time from the ``NUMINDEX_BACKEND`` environment variable:

    auto   (default) use numba when importable, else fall back
    numba  require numba, raise if missing
    numpy  force the interpreted fallback (used by the benchmark and for
           debugging; much slower on the ascent loops)

Space layout convention used by all kernels: a tower is flattened into
``starts`` (block offsets, length L+1), ``leaf_q`` (per-block exponent,
length L) and ``comb_p`` (combining exponents, length L-1).  ``kind`` is
0 for smooth specs, 1 for a flat l1 space, 2 for a flat sup-norm space.
Infinity is encoded as ``np.inf``.

Summations use Kahan compensation and max-scaling so the norm agreement
claims hold at dimension 64; keep fastmath OFF (it would reassociate the
compensated sums).
"""

import os

import numpy as np

_ENV_BACKEND = os.environ.get("NUMINDEX_BACKEND", "auto").strip().lower()
if _ENV_BACKEND not in ("auto", "numba", "numpy"):
    raise RuntimeError(
        "NUMINDEX_BACKEND must be one of auto|numba|numpy, got %r" % _ENV_BACKEND
    )

if _ENV_BACKEND in ("auto", "numba"):
    try:
        from numba import njit as _njit

        NUMBA_ENABLED = True
    except ImportError:
        if _ENV_BACKEND == "numba":
            raise
        NUMBA_ENABLED = False
else:
    NUMBA_ENABLED = False

BACKEND = "numba" if NUMBA_ENABLED else "numpy"

if NUMBA_ENABLED:
    def _compile(fn):
        return _njit(cache=True, fastmath=False)(fn)
else:
    def _compile(fn):
        return fn

INF = np.inf

KIND_SMOOTH = 0
KIND_L1 = 1
KIND_LINF = 2


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------

def _leaf_norm(x, a, b, q):
    # lq norm of x[a:b]; q may be 1 or inf only when this block is the whole
    # (flat) space.
    if b - a == 1:
        return abs(x[a])
    m = 0.0
    for i in range(a, b):
        v = abs(x[i])
        if v > m:
            m = v
    if m == 0.0:
        return 0.0
    if q == INF:
        return m
    if q == 1.0:
        s = 0.0
        c = 0.0
        for i in range(a, b):
            y = abs(x[i]) - c
            t = s + y
            c = (t - s) - y
            s = t
        return s
    s = 0.0
    c = 0.0
    for i in range(a, b):
        y = (abs(x[i]) / m) ** q - c
        t = s + y
        c = (t - s) - y
        s = t
    return m * s ** (1.0 / q)


def _combine(n, b, p):
    # one tower step (|n|^p + |b|^p)^(1/p), max-scaled; zero parts short-cut
    # so that padding a vector with zero blocks changes nothing, bit for bit.
    if b == 0.0:
        return n
    if n == 0.0:
        return b
    s = n if n > b else b
    return s * ((n / s) ** p + (b / s) ** p) ** (1.0 / p)


def _tower_norm(x, starts, leaf_q, comb_p):
    n = leaf_norm(x, starts[0], starts[1], leaf_q[0])
    for k in range(1, leaf_q.shape[0]):
        b = leaf_norm(x, starts[k], starts[k + 1], leaf_q[k])
        n = combine(n, b, comb_p[k - 1])
    return n


def _prefix_norms(x, starts, leaf_q, comb_p, out):
    # out[k] = norm of the first k+1 blocks evaluated at level k+1
    n = leaf_norm(x, starts[0], starts[1], leaf_q[0])
    out[0] = n
    for k in range(1, leaf_q.shape[0]):
        b = leaf_norm(x, starts[k], starts[k + 1], leaf_q[k])
        n = combine(n, b, comb_p[k - 1])
        out[k] = n
    return n


# ---------------------------------------------------------------------------
# duality
# ---------------------------------------------------------------------------

def _norming_coeffs(x, starts, leaf_q, comb_p, f):
    """Write the norming functional of x into f; return the norm.

    Smooth specs only (every exponent in (1, inf)).  Zero blocks get zero
    coefficients; an all-zero x yields f = 0 and norm 0 (callers reject it).
    """
    L = leaf_q.shape[0]
    bn = np.empty(L)
    nn = np.empty(L)
    for k in range(L):
        bn[k] = leaf_norm(x, starts[k], starts[k + 1], leaf_q[k])
    prefix_norms(x, starts, leaf_q, comb_p, nn)
    norm = nn[L - 1]
    for i in range(f.shape[0]):
        f[i] = 0.0
    if norm == 0.0:
        return 0.0
    coef = np.empty(L)
    scale = 1.0
    for k in range(L - 1, 0, -1):
        p = comb_p[k - 1]
        if nn[k] == 0.0:
            coef[k] = 0.0
            continue
        coef[k] = scale * (bn[k] / nn[k]) ** (p - 1.0)
        scale = scale * (nn[k - 1] / nn[k]) ** (p - 1.0)
    coef[0] = scale
    for k in range(L):
        if bn[k] == 0.0 or coef[k] == 0.0:
            continue
        q = leaf_q[k]
        a = starts[k]
        b = starts[k + 1]
        if b - a == 1:
            f[a] = coef[k] if x[a] > 0.0 else -coef[k]
        else:
            for i in range(a, b):
                if x[i] != 0.0:
                    r = (abs(x[i]) / bn[k]) ** (q - 1.0)
                    f[i] = coef[k] * r if x[i] > 0.0 else -coef[k] * r
    return norm


def _pair_sup(x, v, starts, leaf_q, comb_p, kind, fbuf):
    """sup of f(v) over norming functionals f of x (x nonzero).

    The set only depends on the direction of x, so x need not be normalized.
    """
    if kind == 1:
        s = 0.0
        c = 0.0
        for i in range(x.shape[0]):
            if x[i] != 0.0:
                y = (v[i] if x[i] > 0.0 else -v[i]) - c
            else:
                y = abs(v[i]) - c
            t = s + y
            c = (t - s) - y
            s = t
        return s
    if kind == 2:
        m = 0.0
        for i in range(x.shape[0]):
            a = abs(x[i])
            if a > m:
                m = a
        best = -INF
        for i in range(x.shape[0]):
            if abs(x[i]) == m:
                t = v[i] if x[i] > 0.0 else -v[i]
                if t > best:
                    best = t
        return best
    norming_coeffs(x, starts, leaf_q, comb_p, fbuf)
    s = 0.0
    for i in range(x.shape[0]):
        s += fbuf[i] * v[i]
    return s


def _state_sup_abs(x, v, starts, leaf_q, comb_p, kind, fbuf):
    # max over norming functionals of x of |f applied to +-v|
    if kind == 0:
        s = pair_sup(x, v, starts, leaf_q, comb_p, 0, fbuf)
        return abs(s)
    a = pair_sup(x, v, starts, leaf_q, comb_p, kind, fbuf)
    for i in range(v.shape[0]):
        fbuf[i] = -v[i]
    # fbuf doubles as the negated vector; the non-smooth branches of
    # pair_sup never write the scratch argument
    b = pair_sup(x, fbuf, starts, leaf_q, comb_p, kind, fbuf)
    return a if a > b else b


# ---------------------------------------------------------------------------
# small linear algebra helpers
# ---------------------------------------------------------------------------

def _matvec(t, x, out):
    d = t.shape[0]
    for i in range(d):
        s = 0.0
        for j in range(d):
            s += t[i, j] * x[j]
        out[i] = s


def _matvec_t(t, x, out):
    d = t.shape[0]
    for i in range(d):
        s = 0.0
        for j in range(d):
            s += t[j, i] * x[j]
        out[i] = s


def _euclid(x):
    s = 0.0
    for i in range(x.shape[0]):
        s += x[i] * x[i]
    return s ** 0.5


# ---------------------------------------------------------------------------
# closed-form operator norms (flat spaces)
# ---------------------------------------------------------------------------

def _opnorm_l1(t):
    d = t.shape[0]
    best = 0.0
    arg = 0
    for j in range(d):
        s = 0.0
        for i in range(d):
            s += abs(t[i, j])
        if s > best:
            best = s
            arg = j
    return best, arg


def _opnorm_linf(t):
    d = t.shape[0]
    best = 0.0
    arg = 0
    for i in range(d):
        s = 0.0
        for j in range(d):
            s += abs(t[i, j])
        if s > best:
            best = s
            arg = i
    return best, arg


def _opnorm_l2_power(t, tol, max_iter):
    # power iteration on t^T t; returns (sigma_max, witness, iterations)
    d = t.shape[0]
    v = np.empty(d)
    for i in range(d):
        v[i] = 1.0 + 1e-3 * i  # break symmetry deterministically
    n = euclid(v)
    for i in range(d):
        v[i] /= n
    w = np.empty(d)
    u = np.empty(d)
    prev = -1.0
    it = 0
    for it in range(1, max_iter + 1):
        matvec(t, v, w)
        sigma = euclid(w)
        if sigma == 0.0:
            return 0.0, v, it
        matvec_t(t, w, u)
        n = euclid(u)
        if n == 0.0:
            return sigma, v, it
        for i in range(d):
            v[i] = u[i] / n
        if abs(sigma - prev) <= tol * (1.0 + sigma):
            break
        prev = sigma
    matvec(t, v, w)
    return euclid(w), v, it


# ---------------------------------------------------------------------------
# multistart ascent kernels
# ---------------------------------------------------------------------------

def _radius_ascent(t, starts, leaf_q, comb_p, kind, start_pts, pert,
                   max_evals, h0, hmin):
    """Multistart compass ascent of sup_{f in N(x)} |f(t x)| on the sphere.

    start_pts holds one start per row; pert is a bank of perturbation
    directions cycled through when a sweep stalls on a non-smooth spec.
    Returns (best value, best unit witness, total evaluations).
    """
    d = t.shape[0]
    tx = np.empty(d)
    fb = np.empty(d)
    y = np.empty(d)
    best_val = -1.0
    best_x = np.zeros(d)
    total = 0
    pc = 0
    n_pert = pert.shape[0]
    for s in range(start_pts.shape[0]):
        x = start_pts[s].copy()
        n = tower_norm(x, starts, leaf_q, comb_p)
        if n == 0.0 or not np.isfinite(n):
            continue
        for i in range(d):
            x[i] /= n
        matvec(t, x, tx)
        val = state_sup_abs(x, tx, starts, leaf_q, comb_p, kind, fb)
        evals = 1
        h = h0
        while h >= hmin and evals < max_evals:
            bi = -1
            bs = 0.0
            bv = val
            for i in range(d):
                for sg in (1.0, -1.0):
                    for j in range(d):
                        y[j] = x[j]
                    y[i] += sg * h
                    ny = tower_norm(y, starts, leaf_q, comb_p)
                    if ny == 0.0:
                        continue
                    for j in range(d):
                        y[j] /= ny
                    matvec(t, y, tx)
                    v = state_sup_abs(y, tx, starts, leaf_q, comb_p, kind, fb)
                    evals += 1
                    if v > bv:
                        bi = i
                        bs = sg
                        bv = v
            if bi >= 0:
                x[bi] += bs * h
                ny = tower_norm(x, starts, leaf_q, comb_p)
                for j in range(d):
                    x[j] /= ny
                val = bv
                continue
            if kind != 0 and n_pert > 0:
                moved = False
                for _ in range(4):
                    for j in range(d):
                        y[j] = x[j] + h * pert[pc % n_pert, j]
                    pc += 1
                    ny = tower_norm(y, starts, leaf_q, comb_p)
                    if ny == 0.0:
                        continue
                    for j in range(d):
                        y[j] /= ny
                    matvec(t, y, tx)
                    v = state_sup_abs(y, tx, starts, leaf_q, comb_p, kind, fb)
                    evals += 1
                    if v > val:
                        for j in range(d):
                            x[j] = y[j]
                        val = v
                        moved = True
                        break
                if moved:
                    continue
            h *= 0.5
        total += evals
        if val > best_val:
            best_val = val
            for j in range(d):
                best_x[j] = x[j]
    return best_val, best_x, total


def _norm_ascent(t, starts, leaf_q, comb_p, kind, start_pts, pert,
                 max_evals, h0, hmin):
    """Multistart ascent of |t x| over the unit sphere.

    Subgradient phase first (direction t^T j(t x) with j a norming-functional
    selection for t x), then a compass polish identical in shape to the
    radius kernel.  Returns (best value, best unit witness, evaluations).
    """
    d = t.shape[0]
    tx = np.empty(d)
    fb = np.empty(d)
    g = np.empty(d)
    y = np.empty(d)
    best_val = -1.0
    best_x = np.zeros(d)
    total = 0
    pc = 0
    n_pert = pert.shape[0]
    for s in range(start_pts.shape[0]):
        x = start_pts[s].copy()
        n = tower_norm(x, starts, leaf_q, comb_p)
        if n == 0.0 or not np.isfinite(n):
            continue
        for i in range(d):
            x[i] /= n
        matvec(t, x, tx)
        val = tower_norm(tx, starts, leaf_q, comb_p)
        evals = 1
        # subgradient phase
        eta = 0.5
        while eta > 1e-10 and evals < max_evals:
            if val == 0.0:
                break
            if kind == 0:
                norming_coeffs(tx, starts, leaf_q, comb_p, fb)
            elif kind == 1:
                for i in range(d):
                    if tx[i] > 0.0:
                        fb[i] = 1.0
                    elif tx[i] < 0.0:
                        fb[i] = -1.0
                    else:
                        fb[i] = 0.0
            else:
                m = -1.0
                arg = 0
                for i in range(d):
                    if abs(tx[i]) > m:
                        m = abs(tx[i])
                        arg = i
                for i in range(d):
                    fb[i] = 0.0
                fb[arg] = 1.0 if tx[arg] > 0.0 else -1.0
            matvec_t(t, fb, g)
            gn = euclid(g)
            if gn == 0.0:
                break
            for i in range(d):
                y[i] = x[i] + eta * g[i] / gn
            ny = tower_norm(y, starts, leaf_q, comb_p)
            if ny == 0.0:
                eta *= 0.5
                continue
            for i in range(d):
                y[i] /= ny
            matvec(t, y, tx)
            v = tower_norm(tx, starts, leaf_q, comb_p)
            evals += 1
            if v > val:
                for i in range(d):
                    x[i] = y[i]
                val = v
                if eta < 0.5:
                    eta *= 1.5
            else:
                eta *= 0.5
                matvec(t, x, tx)  # restore tx for the next subgradient
        # compass polish
        h = h0
        while h >= hmin and evals < max_evals:
            bi = -1
            bs = 0.0
            bv = val
            for i in range(d):
                for sg in (1.0, -1.0):
                    for j in range(d):
                        y[j] = x[j]
                    y[i] += sg * h
                    ny = tower_norm(y, starts, leaf_q, comb_p)
                    if ny == 0.0:
                        continue
                    for j in range(d):
                        y[j] /= ny
                    matvec(t, y, tx)
                    v = tower_norm(tx, starts, leaf_q, comb_p)
                    evals += 1
                    if v > bv:
                        bi = i
                        bs = sg
                        bv = v
            if bi >= 0:
                x[bi] += bs * h
                ny = tower_norm(x, starts, leaf_q, comb_p)
                for j in range(d):
                    x[j] /= ny
                val = bv
                continue
            if kind != 0 and n_pert > 0:
                moved = False
                for _ in range(4):
                    for j in range(d):
                        y[j] = x[j] + h * pert[pc % n_pert, j]
                    pc += 1
                    ny = tower_norm(y, starts, leaf_q, comb_p)
                    if ny == 0.0:
                        continue
                    for j in range(d):
                        y[j] /= ny
                    matvec(t, y, tx)
                    v = tower_norm(tx, starts, leaf_q, comb_p)
                    evals += 1
                    if v > val:
                        for j in range(d):
                            x[j] = y[j]
                        val = v
                        moved = True
                        break
                if moved:
                    continue
            h *= 0.5
        total += evals
        if val > best_val:
            best_val = val
            for j in range(d):
                best_x[j] = x[j]
    return best_val, best_x, total


# ---------------------------------------------------------------------------
# backend binding
# ---------------------------------------------------------------------------

leaf_norm = _compile(_leaf_norm)
combine = _compile(_combine)
tower_norm = _compile(_tower_norm)
prefix_norms = _compile(_prefix_norms)
norming_coeffs = _compile(_norming_coeffs)
pair_sup = _compile(_pair_sup)
state_sup_abs = _compile(_state_sup_abs)
matvec = _compile(_matvec)
matvec_t = _compile(_matvec_t)
euclid = _compile(_euclid)
opnorm_l1 = _compile(_opnorm_l1)
opnorm_linf = _compile(_opnorm_linf)
opnorm_l2_power = _compile(_opnorm_l2_power)
radius_ascent = _compile(_radius_ascent)
norm_ascent = _compile(_norm_ascent)


def warmup():
    """Force compilation of all kernels (no-op on the numpy backend)."""
    starts = np.array([0, 1, 2], dtype=np.int64)
    lq = np.array([2.0, 2.0])
    cp = np.array([2.0])
    x = np.array([3.0, 4.0])
    f = np.empty(2)
    t = np.eye(2)
    pts = np.eye(2)
    pert = np.zeros((1, 2))
    tower_norm(x, starts, lq, cp)
    prefix_norms(x, starts, lq, cp, f)
    norming_coeffs(x, starts, lq, cp, f)
    pair_sup(x, x, starts, lq, cp, 0, f)
    state_sup_abs(x, x, starts, lq, cp, 1, f)
    opnorm_l1(t)
    opnorm_linf(t)
    opnorm_l2_power(t, 1e-10, 50)
    radius_ascent(t, starts, lq, cp, 0, pts, pert, 50, 0.25, 1e-2)
    norm_ascent(t, starts, lq, cp, 0, pts, pert, 50, 0.25, 1e-2)
