# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Mirrors ``_pykernels`` function for function."""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor, sqrt
from libc.stdint cimport int64_t, uint64_t
from libc.string cimport memcpy

cnp.import_array()


def assign_sq(X, C):
    cdef const double[:, ::1] x = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[:, ::1] c = np.ascontiguousarray(C, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1], k = c.shape[0]
    labels_arr = np.empty(n, dtype=np.int64)
    best_arr = np.empty(n, dtype=np.float64)
    cdef int64_t[::1] labels = labels_arr
    cdef double[::1] best = best_arr
    cdef Py_ssize_t i, j, t, arg
    cdef double acc, diff, cur
    with nogil:
        for i in range(n):
            cur = 0.0
            arg = -1
            for j in range(k):
                acc = 0.0
                for t in range(d):
                    diff = x[i, t] - c[j, t]
                    acc = acc + diff * diff
                if arg < 0 or acc < cur:
                    cur = acc
                    arg = j
            labels[i] = arg
            best[i] = cur
    return labels_arr, best_arr


cdef inline uint64_t _mix(uint64_t h) nogil:
    # splitmix64 finaliser
    h ^= h >> 30
    h *= <uint64_t>0xbf58476d1ce4e5b9
    h ^= h >> 27
    h *= <uint64_t>0x94d049bb133111eb
    h ^= h >> 31
    return h


def count_cells(X, origin, double side, Py_ssize_t threshold):
    cdef const double[:, ::1] x = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[::1] org = np.ascontiguousarray(origin, dtype=np.float64)
    cdef Py_ssize_t n = x.shape[0], d = x.shape[1]
    cdef Py_ssize_t cap = 16
    while cap < 2 * min(n, threshold) + 2:
        cap <<= 1
    cells_arr = np.empty((min(n, threshold) + 1, d), dtype=np.float64)
    slot_arr = np.full(cap, -1, dtype=np.int64)
    row_arr = np.empty(d, dtype=np.float64)
    cdef double[:, ::1] cells = cells_arr
    cdef int64_t[::1] slot = slot_arr
    cdef double[::1] row = row_arr
    cdef Py_ssize_t i, t, count = 0, pos, mask = cap - 1
    cdef uint64_t h, bits
    cdef int64_t occ
    cdef bint same
    cdef double v
    with nogil:
        for i in range(n):
            h = <uint64_t>0x9e3779b97f4a7c15
            for t in range(d):
                v = floor((x[i, t] - org[t]) / side) + 0.0
                row[t] = v
                memcpy(&bits, &v, 8)
                h = _mix(h ^ (bits + <uint64_t>t * <uint64_t>0x9e3779b97f4a7c15))
            pos = <Py_ssize_t>(h & <uint64_t>mask)
            while True:
                occ = slot[pos]
                if occ < 0:
                    for t in range(d):
                        cells[count, t] = row[t]
                    slot[pos] = count
                    count += 1
                    break
                same = True
                for t in range(d):
                    if cells[occ, t] != row[t]:
                        same = False
                        break
                if same:
                    break
                pos = (pos + 1) & mask
            if count >= threshold:
                break
    return min(count, threshold)


cdef inline double _block_total(const double[::1] val, Py_ssize_t lo, Py_ssize_t hi) nogil:
    cdef double acc = 0.0
    cdef Py_ssize_t i
    for i in range(lo, hi):
        acc = acc + val[i]
    return acc


def block_sums(val, Py_ssize_t block):
    cdef const double[::1] v = np.ascontiguousarray(val, dtype=np.float64)
    cdef Py_ssize_t n = v.shape[0], nb = (n + block - 1) // block, b
    out_arr = np.empty(nb, dtype=np.float64)
    cdef double[::1] out = out_arr
    with nogil:
        for b in range(nb):
            out[b] = _block_total(v, b * block, min(n, (b + 1) * block))
    return out_arr


def tree_draw(double[::1] val, double[::1] bsum, double uniform, Py_ssize_t block):
    return _draw(val, bsum, uniform, block)


cdef Py_ssize_t _draw(double[::1] val, double[::1] bsum, double uniform, Py_ssize_t block) nogil:
    cdef Py_ssize_t n = val.shape[0], nb = bsum.shape[0], i, b, pos = -1
    cdef double total = 0.0, target, acc
    for b in range(nb):
        total = total + bsum[b]
    if total > 0.0:
        target = uniform * total
        acc = 0.0
        b = nb
        for i in range(nb):
            if acc + bsum[i] > target:
                b = i
                break
            acc = acc + bsum[i]
        if b == nb:
            b = nb - 1
            while not bsum[b] > 0.0:
                b -= 1
            acc = 0.0
            for i in range(b):
                acc = acc + bsum[i]
        for i in range(b * block, min(n, (b + 1) * block)):
            acc = acc + val[i]
            if acc > target:
                pos = i
                break
        if pos < 0:
            for i in range(min(n, (b + 1) * block) - 1, b * block - 1, -1):
                if val[i] > 0.0:
                    pos = i
                    break
    return pos


def tree_insert(const int64_t[:, ::1] st, const int64_t[:, ::1] en, const double[::1] wt,
                const double[::1] lc, int64_t[::1] u, int64_t[::1] owner, double[::1] val,
                double[::1] bsum, Py_ssize_t pos, Py_ssize_t j, Py_ssize_t block):
    cdef Py_ssize_t n = wt.shape[0], L = st.shape[0] - 1
    cdef Py_ssize_t i, b, lev, lo, hi, s, e, ns, ne, a
    cdef double cost
    with nogil:
        a = u[pos]
        lo = st[a + 1, pos]
        hi = en[a + 1, pos]
        for lev in range(a + 1, L + 1):
            s = st[lev, pos]
            e = en[lev, pos]
            if lev < L:
                ns = st[lev + 1, pos]
                ne = en[lev + 1, pos]
            else:
                ns = e
                ne = e
            cost = lc[lev + 1]
            for i in range(s, ns):
                u[i] = lev
                owner[i] = j
                val[i] = wt[i] * cost
            for i in range(ne, e):
                u[i] = lev
                owner[i] = j
                val[i] = wt[i] * cost
        for b in range(lo // block, (hi - 1) // block + 1):
            bsum[b] = _block_total(val, b * block, min(n, (b + 1) * block))


cdef inline double _dist_z(const double[:, ::1] a, Py_ssize_t i, const double[:, ::1] b,
                           Py_ssize_t j, int z) nogil:
    cdef double acc = 0.0, diff
    cdef Py_ssize_t t
    for t in range(a.shape[1]):
        diff = a[i, t] - b[j, t]
        acc = acc + diff * diff
    return acc if z == 2 else sqrt(acc)


def tree_propose(double[::1] val, double[::1] bsum, const int64_t[::1] u,
                 const int64_t[::1] owner, const double[::1] lc, const double[:, ::1] Xs,
                 const double[:, ::1] C, Py_ssize_t j, int z, const double[::1] unif,
                 Py_ssize_t block):
    cdef Py_ssize_t trials = unif.shape[0] // 2, t, pos, c, best_pos = -1
    cdef double tc, thr, dmin, dc, ratio, best_ratio = -1.0
    cdef bint ok
    for t in range(trials):
        pos = _draw(val, bsum, unif[2 * t], block)
        if pos < 0:
            return -1, t + 1
        with nogil:
            tc = lc[u[pos] + 1]
            thr = unif[2 * t + 1] * tc
            dmin = _dist_z(Xs, pos, C, owner[pos], z)
            ok = dmin > thr
            if ok:
                for c in range(j):
                    dc = _dist_z(Xs, pos, C, c, z)
                    if dc < dmin:
                        dmin = dc
                    if dc <= thr:
                        ok = False
                        break
        if ok:
            return pos, t + 1
        ratio = dmin / tc
        if ratio > best_ratio:
            best_pos = pos
            best_ratio = ratio
    return best_pos, trials
