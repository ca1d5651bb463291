# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled pixel kernels. Semantics mirror `_fallback.py` exactly."""

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef inline int _find(int* parent, int x) nogil:
    cdef int root = x
    cdef int tmp
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        tmp = parent[x]
        parent[x] = root
        x = tmp
    return root


def label_components(mask, int connectivity=8):
    if connectivity != 4 and connectivity != 8:
        raise ValueError("connectivity must be 4 or 8")
    cdef cnp.ndarray[cnp.uint8_t, ndim=2, mode="c"] m = \
        np.ascontiguousarray(mask, dtype=np.uint8)
    cdef int h = m.shape[0]
    cdef int w = m.shape[1]
    cdef cnp.ndarray[cnp.int32_t, ndim=2, mode="c"] labels = \
        np.zeros((h, w), dtype=np.int32)
    cdef cnp.ndarray[cnp.int32_t, ndim=1, mode="c"] parent_arr = \
        np.zeros(h * w // 2 + 2, dtype=np.int32)
    cdef int* parent = <int*> &parent_arr[0]
    cdef int nxt = 1, y, x, r0, r, v
    cdef int n0, n1, n2, n3
    parent[0] = 0
    for y in range(h):
        for x in range(w):
            if m[y, x] == 0:
                continue
            n0 = labels[y, x - 1] if x > 0 else 0
            n1 = labels[y - 1, x] if y > 0 else 0
            n2 = 0
            n3 = 0
            if connectivity == 8 and y > 0:
                if x > 0:
                    n2 = labels[y - 1, x - 1]
                if x + 1 < w:
                    n3 = labels[y - 1, x + 1]
            if n0 == 0 and n1 == 0 and n2 == 0 and n3 == 0:
                labels[y, x] = nxt
                parent[nxt] = nxt
                nxt += 1
            else:
                r0 = h * w + 1
                if n0:
                    r = _find(parent, n0)
                    if r < r0: r0 = r
                if n1:
                    r = _find(parent, n1)
                    if r < r0: r0 = r
                if n2:
                    r = _find(parent, n2)
                    if r < r0: r0 = r
                if n3:
                    r = _find(parent, n3)
                    if r < r0: r0 = r
                labels[y, x] = r0
                if n0: parent[_find(parent, n0)] = r0
                if n1: parent[_find(parent, n1)] = r0
                if n2: parent[_find(parent, n2)] = r0
                if n3: parent[_find(parent, n3)] = r0
    # union targets the smaller root, so class root == min provisional id
    # and ascending roots give first-appearance numbering
    cdef cnp.ndarray[cnp.int32_t, ndim=1, mode="c"] lut = \
        np.zeros(nxt, dtype=np.int32)
    cdef int count = 0
    for v in range(1, nxt):
        r = _find(parent, v)
        if r == v:
            count += 1
            lut[v] = count
    for v in range(1, nxt):
        lut[v] = lut[_find(parent, v)]
    for y in range(h):
        for x in range(w):
            if labels[y, x]:
                labels[y, x] = lut[labels[y, x]]
    return np.asarray(labels), count


def region_stats(labels, int n):
    cdef cnp.ndarray[cnp.int32_t, ndim=2, mode="c"] lab = \
        np.ascontiguousarray(labels, dtype=np.int32)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] area = np.zeros(n, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] min_row = np.full(n, lab.shape[0] + 1, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] min_col = np.full(n, lab.shape[1] + 1, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] max_row = np.full(n, -1, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] max_col = np.full(n, -1, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] sum_row = np.zeros(n, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] sum_col = np.zeros(n, dtype=np.int64)
    cdef int h = lab.shape[0], w = lab.shape[1]
    cdef int y, x, k
    for y in range(h):
        for x in range(w):
            k = lab[y, x]
            if k == 0:
                continue
            if k > n:
                raise ValueError("label exceeds n")
            k -= 1
            area[k] += 1
            if y < min_row[k]: min_row[k] = y
            if x < min_col[k]: min_col[k] = x
            if y > max_row[k]: max_row[k] = y
            if x > max_col[k]: max_col[k] = x
            sum_row[k] += y
            sum_col[k] += x
    if n and area.min() == 0:
        raise ValueError("labels must cover 1..n")
    return area, min_row, min_col, max_row, max_col, sum_row, sum_col


def confusion_counts(pred, gt):
    cdef cnp.ndarray[cnp.uint8_t, ndim=2, mode="c"] p = \
        np.ascontiguousarray(pred, dtype=np.uint8)
    cdef cnp.ndarray[cnp.uint8_t, ndim=2, mode="c"] g = \
        np.ascontiguousarray(gt, dtype=np.uint8)
    if p.shape[0] != g.shape[0] or p.shape[1] != g.shape[1]:
        raise ValueError("shape mismatch")
    cdef long long tp = 0, fp = 0, fn = 0, tn = 0
    cdef int y, x
    cdef bint pv, gv
    for y in range(p.shape[0]):
        for x in range(p.shape[1]):
            pv = p[y, x] != 0
            gv = g[y, x] != 0
            if pv and gv: tp += 1
            elif pv: fp += 1
            elif gv: fn += 1
            else: tn += 1
    return tp, fp, fn, tn


def binary_dilate(mask, offsets):
    cdef cnp.ndarray[cnp.uint8_t, ndim=2, mode="c"] m = \
        np.ascontiguousarray(mask, dtype=np.uint8)
    cdef cnp.ndarray[cnp.int64_t, ndim=2, mode="c"] off = \
        np.ascontiguousarray(offsets, dtype=np.int64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=2, mode="c"] out = \
        np.zeros_like(m)
    cdef int h = m.shape[0], w = m.shape[1], k = off.shape[0]
    cdef int y, x, i
    cdef long long yy, xx
    for y in range(h):
        for x in range(w):
            for i in range(k):
                yy = y + off[i, 0]
                xx = x + off[i, 1]
                if 0 <= yy < h and 0 <= xx < w and m[yy, xx]:
                    out[y, x] = 1
                    break
    return np.asarray(out)


def binary_erode(mask, offsets):
    cdef cnp.ndarray[cnp.uint8_t, ndim=2, mode="c"] m = \
        np.ascontiguousarray(mask, dtype=np.uint8)
    cdef cnp.ndarray[cnp.int64_t, ndim=2, mode="c"] off = \
        np.ascontiguousarray(offsets, dtype=np.int64)
    cdef cnp.ndarray[cnp.uint8_t, ndim=2, mode="c"] out = \
        np.ones_like(m)
    cdef int h = m.shape[0], w = m.shape[1], k = off.shape[0]
    cdef int y, x, i
    cdef long long yy, xx
    for y in range(h):
        for x in range(w):
            for i in range(k):
                yy = y + off[i, 0]
                xx = x + off[i, 1]
                if yy < 0 or yy >= h or xx < 0 or xx >= w or m[yy, xx] == 0:
                    out[y, x] = 0
                    break
    return np.asarray(out)
