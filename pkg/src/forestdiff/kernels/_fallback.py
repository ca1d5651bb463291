"""Pure numpy implementations of the pixel kernels.

Used when the compiled extension is unavailable (or forced via
FORESTDIFF_PURE=1). Semantics must match `_native.pyx` exactly; the
equivalence is pinned by tests and the benchmark script.
"""

import numpy as np


def _as_mask(mask):
    m = np.ascontiguousarray(mask, dtype=np.uint8)
    if m.ndim != 2:
        raise ValueError("mask must be 2-d")
    return m


def label_components(mask, connectivity=8):
    """Label connected foreground regions.

    Returns (labels, n) where labels is int32 with 0 for background and
    1..n for components, numbered by first pixel in row-major order.
    """
    if connectivity not in (4, 8):
        raise ValueError("connectivity must be 4 or 8")
    m = _as_mask(mask)
    h, w = m.shape
    labels = np.zeros((h, w), dtype=np.int32)
    if m.sum() == 0:
        return labels, 0
    # union-find over provisional labels assigned in scan order
    parent = [0]

    def find(x):
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    nxt = 1
    for y in range(h):
        row = m[y]
        for x in range(w):
            if not row[x]:
                continue
            neigh = []
            if x > 0 and labels[y, x - 1]:
                neigh.append(labels[y, x - 1])
            if y > 0:
                if labels[y - 1, x]:
                    neigh.append(labels[y - 1, x])
                if connectivity == 8:
                    if x > 0 and labels[y - 1, x - 1]:
                        neigh.append(labels[y - 1, x - 1])
                    if x + 1 < w and labels[y - 1, x + 1]:
                        neigh.append(labels[y - 1, x + 1])
            if not neigh:
                labels[y, x] = nxt
                parent.append(nxt)
                nxt += 1
            else:
                roots = [find(v) for v in neigh]
                r0 = min(roots)
                labels[y, x] = r0
                for r in roots:
                    parent[r] = r0
    # unions always point at the smaller root, so a class's root is its
    # minimum provisional id, and ascending roots = first-appearance order
    roots = np.zeros(nxt, dtype=np.int32)
    for v in range(1, nxt):
        roots[v] = find(v)
    uniq = np.unique(roots[1:])
    lut = np.zeros(nxt, dtype=np.int32)
    lut[uniq] = np.arange(1, uniq.size + 1, dtype=np.int32)
    labels = lut[roots[labels]]
    return labels, int(uniq.size)


def region_stats(labels, n):
    """Per-label pixel stats for labels 1..n.

    Returns (area, min_row, min_col, max_row, max_col, sum_row, sum_col),
    each an int64 array of length n.
    """
    lab = np.ascontiguousarray(labels, dtype=np.int32)
    if n == 0:
        z = np.zeros(0, dtype=np.int64)
        return z, z.copy(), z.copy(), z.copy(), z.copy(), z.copy(), z.copy()
    rows, cols = np.nonzero(lab)
    idx = lab[rows, cols] - 1
    area = np.bincount(idx, minlength=n).astype(np.int64)
    if np.any(area == 0):
        raise ValueError("labels must cover 1..n")
    big = np.iinfo(np.int64).max
    min_row = np.full(n, big, dtype=np.int64)
    min_col = np.full(n, big, dtype=np.int64)
    max_row = np.full(n, -1, dtype=np.int64)
    max_col = np.full(n, -1, dtype=np.int64)
    np.minimum.at(min_row, idx, rows)
    np.minimum.at(min_col, idx, cols)
    np.maximum.at(max_row, idx, rows)
    np.maximum.at(max_col, idx, cols)
    sum_row = np.bincount(idx, weights=rows, minlength=n).astype(np.int64)
    sum_col = np.bincount(idx, weights=cols, minlength=n).astype(np.int64)
    return area, min_row, min_col, max_row, max_col, sum_row, sum_col


def confusion_counts(pred, gt):
    """Binary confusion counts (tp, fp, fn, tn) as python ints."""
    p = _as_mask(pred).astype(bool)
    g = _as_mask(gt).astype(bool)
    if p.shape != g.shape:
        raise ValueError("shape mismatch")
    tp = int(np.count_nonzero(p & g))
    fp = int(np.count_nonzero(p & ~g))
    fn = int(np.count_nonzero(~p & g))
    tn = p.size - tp - fp - fn
    return tp, fp, fn, tn


def _shifted(a, dy, dx):
    # a[y+dy, x+dx] with zeros outside
    h, w = a.shape
    out = np.zeros_like(a)
    ys0, ys1 = max(-dy, 0), min(h - dy, h)
    xs0, xs1 = max(-dx, 0), min(w - dx, w)
    if ys0 < ys1 and xs0 < xs1:
        out[ys0:ys1, xs0:xs1] = a[ys0 + dy:ys1 + dy, xs0 + dx:xs1 + dx]
    return out


def binary_dilate(mask, offsets):
    """Dilation by an explicit offset set; out-of-bounds reads are zero."""
    m = _as_mask(mask)
    out = np.zeros_like(m)
    for dy, dx in np.asarray(offsets, dtype=np.int64):
        np.maximum(out, _shifted(m, int(dy), int(dx)), out=out)
    return out


def binary_erode(mask, offsets):
    """Erosion by an explicit offset set; out-of-bounds reads are zero."""
    m = _as_mask(mask)
    out = np.ones_like(m)
    for dy, dx in np.asarray(offsets, dtype=np.int64):
        np.minimum(out, _shifted(m, int(dy), int(dx)), out=out)
    return out
