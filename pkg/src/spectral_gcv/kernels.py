"""Inner loops that dominate runtime.

Every kernel exists twice: a loop version compiled by numba (``*_numba``) and
a vectorised numpy version (``*_numpy``). The public names dispatch on
:data:`spectral_gcv._accel.USE_NUMBA`; the benchmark calls both explicitly.
"""

from __future__ import annotations

import math

import numpy as np

from ._accel import USE_NUMBA, njit

# ---------------------------------------------------------------------------
# concentration event: exhaustive (k, l) scan
# ---------------------------------------------------------------------------


@njit(cache=True)
def omega_check_numba(sq, delta2, eps, t):
    """True iff ``|sum_{k<j<=l} sq_j - (l-k) delta2| <= eps (l-k) delta2``
    for every ``t <= l <= m`` and ``0 <= k <= l // 2``."""
    m = sq.shape[0]
    csum = np.empty(m + 1)
    csum[0] = 0.0
    for j in range(m):
        csum[j + 1] = csum[j] + sq[j]
    for l in range(t, m + 1):
        for k in range(l // 2 + 1):
            n = l - k
            dev = abs(csum[l] - csum[k] - n * delta2)
            if dev > eps * n * delta2:
                return False
    return True


@njit(cache=True)
def omega_check_batch_numba(sq, delta2, eps, t):
    out = np.empty(sq.shape[0], dtype=np.bool_)
    for r in range(sq.shape[0]):
        out[r] = omega_check_numba(sq[r], delta2, eps, t)
    return out


def omega_check_numpy(sq, delta2, eps, t):
    m = sq.shape[0]
    csum = np.concatenate(([0.0], np.cumsum(sq)))
    ls = np.arange(t, m + 1)[:, None]
    ks = np.arange(m // 2 + 1)[None, :]
    valid = ks <= ls // 2
    n = np.where(valid, ls - ks, 1)
    dev = np.abs(csum[ls] - csum[np.minimum(ks, ls)] - n * delta2)
    return bool(np.all(~valid | (dev <= eps * n * delta2)))


def omega_check_batch_numpy(sq, delta2, eps, t):
    return np.array([omega_check_numpy(row, delta2, eps, t) for row in sq], dtype=bool)


# ---------------------------------------------------------------------------
# parallel-beam ray tracing (parametric, Siddon-style)
# ---------------------------------------------------------------------------

_TINY = 1e-12


@njit(cache=True)
def _trace_ray_numba(n, c, s, offset, out_idx, out_len):
    # line: x cos + y sin = offset, direction (-sin, cos), box [-n/2, n/2]^2
    half = 0.5 * n
    px = offset * c
    py = offset * s
    dx = -s
    dy = c
    tmin = -np.inf
    tmax = np.inf
    if abs(dx) < _TINY:
        if px < -half - _TINY or px > half + _TINY:
            return 0
    else:
        t0 = (-half - px) / dx
        t1 = (half - px) / dx
        tmin = max(tmin, min(t0, t1))
        tmax = min(tmax, max(t0, t1))
    if abs(dy) < _TINY:
        if py < -half - _TINY or py > half + _TINY:
            return 0
    else:
        t0 = (-half - py) / dy
        t1 = (half - py) / dy
        tmin = max(tmin, min(t0, t1))
        tmax = min(tmax, max(t0, t1))
    if not tmax - tmin > _TINY:
        return 0
    ts = np.empty(2 * n + 4)
    cnt = 0
    ts[cnt] = tmin
    cnt += 1
    ts[cnt] = tmax
    cnt += 1
    if abs(dx) >= _TINY:
        for g in range(n + 1):
            tt = (g - half - px) / dx
            if tmin < tt < tmax:
                ts[cnt] = tt
                cnt += 1
    if abs(dy) >= _TINY:
        for g in range(n + 1):
            tt = (g - half - py) / dy
            if tmin < tt < tmax:
                ts[cnt] = tt
                cnt += 1
    ts = np.sort(ts[:cnt])
    nnz = 0
    for q in range(cnt - 1):
        seg = ts[q + 1] - ts[q]
        if seg <= _TINY:
            continue
        tm = 0.5 * (ts[q] + ts[q + 1])
        col = int(math.floor(px + tm * dx + half))
        row = int(math.floor(half - (py + tm * dy)))
        col = min(max(col, 0), n - 1)
        row = min(max(row, 0), n - 1)
        out_idx[nnz] = row * n + col
        out_len[nnz] = seg
        nnz += 1
    return nnz


@njit(cache=True)
def radon_rows_numba(n, cosines, sines, offsets):
    n_rays = cosines.shape[0] * offsets.shape[0]
    cap = 2 * n + 4
    idx = np.empty(n_rays * cap, dtype=np.int64)
    val = np.empty(n_rays * cap)
    indptr = np.zeros(n_rays + 1, dtype=np.int64)
    buf_i = np.empty(cap, dtype=np.int64)
    buf_v = np.empty(cap)
    pos = 0
    r = 0
    for a in range(cosines.shape[0]):
        for b in range(offsets.shape[0]):
            k = _trace_ray_numba(n, cosines[a], sines[a], offsets[b], buf_i, buf_v)
            for q in range(k):
                idx[pos] = buf_i[q]
                val[pos] = buf_v[q]
                pos += 1
            r += 1
            indptr[r] = pos
    return indptr, idx[:pos].copy(), val[:pos].copy()


def _trace_ray_numpy(n, c, s, offset):
    half = 0.5 * n
    px, py = offset * c, offset * s
    dx, dy = -s, c
    tmin, tmax = -np.inf, np.inf
    for p, d in ((px, dx), (py, dy)):
        if abs(d) < _TINY:
            if p < -half - _TINY or p > half + _TINY:
                return np.empty(0, dtype=np.int64), np.empty(0)
        else:
            t0, t1 = (-half - p) / d, (half - p) / d
            tmin, tmax = max(tmin, min(t0, t1)), min(tmax, max(t0, t1))
    if not tmax - tmin > _TINY:
        return np.empty(0, dtype=np.int64), np.empty(0)
    grid = np.arange(n + 1) - half
    parts = [np.array([tmin, tmax])]
    for p, d in ((px, dx), (py, dy)):
        if abs(d) >= _TINY:
            tt = (grid - p) / d
            parts.append(tt[(tt > tmin) & (tt < tmax)])
    ts = np.sort(np.concatenate(parts))
    seg = np.diff(ts)
    keep = seg > _TINY
    tm = 0.5 * (ts[:-1] + ts[1:])[keep]
    col = np.clip(np.floor(px + tm * dx + half).astype(np.int64), 0, n - 1)
    row = np.clip(np.floor(half - (py + tm * dy)).astype(np.int64), 0, n - 1)
    return row * n + col, seg[keep]


def radon_rows_numpy(n, cosines, sines, offsets):
    idx, val, indptr = [], [], [0]
    for c, s in zip(cosines, sines):
        for off in offsets:
            i, v = _trace_ray_numpy(n, c, s, off)
            idx.append(i)
            val.append(v)
            indptr.append(indptr[-1] + i.size)
    return (
        np.asarray(indptr, dtype=np.int64),
        np.concatenate(idx) if idx else np.empty(0, dtype=np.int64),
        np.concatenate(val) if val else np.empty(0),
    )


# ---------------------------------------------------------------------------
# cyclic Jacobi for dense symmetric matrices
# ---------------------------------------------------------------------------


@njit(cache=True)
def jacobi_eigh_numba(a, tol, max_sweeps):
    # rotate only where |a_pq| > tol * sqrt(|a_pp a_qq|): relative accuracy on
    # definite matrices; converged when a full sweep rotates nothing
    a = a.copy()
    n = a.shape[0]
    v = np.eye(n)
    sweeps = 0
    for sweep in range(max_sweeps):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0 or abs(apq) <= tol * math.sqrt(abs(a[p, p] * a[q, q])):
                    continue
                rotated = True
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
        if not rotated:
            break
        sweeps += 1
    w = np.empty(n)
    for i in range(n):
        w[i] = a[i, i]
    return w, v, sweeps


def jacobi_eigh_numpy(a, tol, max_sweeps):
    a = np.array(a, dtype=float, copy=True)
    n = a.shape[0]
    v = np.eye(n)
    sweeps = 0
    for _ in range(max_sweeps):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0 or abs(apq) <= tol * math.sqrt(abs(a[p, p] * a[q, q])):
                    continue
                rotated = True
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rot = np.array([[c, s], [-s, c]])
                a[:, [p, q]] = a[:, [p, q]] @ rot
                a[[p, q], :] = rot.T @ a[[p, q], :]
                a[p, q] = a[q, p] = 0.0
                v[:, [p, q]] = v[:, [p, q]] @ rot
        if not rotated:
            break
        sweeps += 1
    return np.diag(a).copy(), v, sweeps


if USE_NUMBA:
    omega_check = omega_check_numba
    omega_check_batch = omega_check_batch_numba
    radon_rows = radon_rows_numba
    jacobi_eigh = jacobi_eigh_numba
else:
    omega_check = omega_check_numpy
    omega_check_batch = omega_check_batch_numpy
    radon_rows = radon_rows_numpy
    jacobi_eigh = jacobi_eigh_numpy
