# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Cython implementations of the hot evaluation kernels.

Twin of ``_pure``; both backends perform the same floating-point operations
in the same order so results are bit-identical. Keep the two files in sync.
"""

import numpy as np


cdef inline double _iou(double ax, double ay, double aw, double ah,
                        double bx, double by, double bw, double bh) nogil:
    if ax == bx and ay == by and aw == bw and ah == bh:
        return 1.0
    cdef double iw = min(ax + aw, bx + bw) - max(ax, bx)
    cdef double ih = min(ay + ah, by + bh) - max(ay, by)
    cdef double inter = (iw if iw > 0.0 else 0.0) * (ih if ih > 0.0 else 0.0)
    cdef double union_ = aw * ah + bw * bh - inter
    cdef double ratio
    if union_ <= 0.0:
        return 0.0
    ratio = inter / union_
    return 1.0 if ratio > 1.0 else ratio


def iou_single(double ax, double ay, double aw, double ah,
               double bx, double by, double bw, double bh):
    """IoU of two top-left/width/height boxes (identical boxes score exactly 1)."""
    return _iou(ax, ay, aw, ah, bx, by, bw, bh)


def iou_matrix(a, b):
    """Pairwise IoU between (N, 4) and (M, 4) xywh boxes, as an (N, M) array."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t n = a.shape[0], m = b.shape[0]
    out = np.zeros((n, m))
    if n == 0 or m == 0:
        return out
    cdef double[:, ::1] av = a
    cdef double[:, ::1] bv = b
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i, j
    with nogil:
        for i in range(n):
            for j in range(m):
                ov[i, j] = _iou(av[i, 0], av[i, 1], av[i, 2], av[i, 3],
                                bv[j, 0], bv[j, 1], bv[j, 2], bv[j, 3])
    return out


def greedy_match(ious, double threshold):
    """Greedy row-major matching over an (N, M) IoU matrix.

    Rows are visited in order (callers pre-sort detections by confidence);
    each row takes the unmatched column with the highest IoU >= threshold,
    ties going to the lowest column index. Returns the matched column per
    row, -1 when unmatched.
    """
    ious = np.ascontiguousarray(ious, dtype=np.float64)
    cdef Py_ssize_t n = ious.shape[0], m = ious.shape[1]
    matched = np.full(n, -1, dtype=np.intp)
    used = np.zeros(m, dtype=np.uint8)
    if n == 0 or m == 0:
        return matched
    cdef double[:, ::1] iv = ious
    cdef Py_ssize_t[::1] mv = matched
    cdef unsigned char[::1] uv = used
    cdef Py_ssize_t i, j, best
    cdef double best_iou, v
    with nogil:
        for i in range(n):
            best = -1
            best_iou = 0.0
            for j in range(m):
                if uv[j]:
                    continue
                v = iv[i, j]
                if v >= threshold and v > best_iou:
                    best = j
                    best_iou = v
            if best >= 0:
                mv[i] = best
                uv[best] = 1
    return matched


def envelope_101(recall, precision):
    """Interpolated precision at the 101 recall grid points.

    For each grid point r the envelope is the maximum precision over all
    curve points with recall >= r (0 past the end of the curve). ``recall``
    must be non-decreasing.
    """
    recall = np.ascontiguousarray(recall, dtype=np.float64)
    precision = np.ascontiguousarray(precision, dtype=np.float64)
    cdef Py_ssize_t n = recall.shape[0]
    env = np.zeros(101)
    if n == 0:
        return env
    max_from = np.empty(n)
    cdef double[::1] rv = recall
    cdef double[::1] pv = precision
    cdef double[::1] mx = max_from
    cdef double[::1] ev = env
    cdef Py_ssize_t i, k
    cdef double r
    with nogil:
        mx[n - 1] = pv[n - 1]
        for i in range(n - 2, -1, -1):
            mx[i] = pv[i] if pv[i] > mx[i + 1] else mx[i + 1]
        i = 0
        for k in range(101):
            r = k / 100.0
            while i < n and rv[i] < r:
                i += 1
            if i < n:
                ev[k] = mx[i]
    return env
