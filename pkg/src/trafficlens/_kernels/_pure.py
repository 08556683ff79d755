"""Pure numpy implementations of the hot evaluation kernels.

Mirrors ``_native`` (the Cython extension) operation for operation; both
backends perform the same floating-point operations in the same order so
results are bit-identical. Keep the two files in sync.
"""

import numpy as np

# Recall grid for 101-point interpolated average precision. Built from
# i / 100.0 so the grid doubles match an independent max-scan that uses the
# same expression (np.linspace rounds differently in the last ulp).
RECALL_GRID = np.array([i / 100.0 for i in range(101)])


def iou_single(ax, ay, aw, ah, bx, by, bw, bh):
    """IoU of two top-left/width/height boxes.

    Identical boxes score exactly 1 (including two copies of the same
    degenerate point); other zero-union pairs score 0. The ratio is clamped
    to 1 so rounding on near-identical boxes cannot push it above range.
    """
    if ax == bx and ay == by and aw == bw and ah == bh:
        return 1.0
    iw = min(ax + aw, bx + bw) - max(ax, bx)
    ih = min(ay + ah, by + bh) - max(ay, by)
    inter = (iw if iw > 0.0 else 0.0) * (ih if ih > 0.0 else 0.0)
    union = aw * ah + bw * bh - inter
    if union <= 0.0:
        return 0.0
    ratio = inter / union
    return 1.0 if ratio > 1.0 else ratio


def iou_matrix(a, b):
    """Pairwise IoU between (N, 4) and (M, 4) xywh boxes, as an (N, M) array."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    n, m = a.shape[0], b.shape[0]
    if n == 0 or m == 0:
        return np.zeros((n, m))
    ax1 = a[:, 0][:, None]
    ay1 = a[:, 1][:, None]
    ax2 = ax1 + a[:, 2][:, None]
    ay2 = ay1 + a[:, 3][:, None]
    bx1 = b[:, 0][None, :]
    by1 = b[:, 1][None, :]
    bx2 = bx1 + b[:, 2][None, :]
    by2 = by1 + b[:, 3][None, :]
    iw = np.minimum(ax2, bx2) - np.maximum(ax1, bx1)
    ih = np.minimum(ay2, by2) - np.maximum(ay1, by1)
    inter = np.where(iw > 0.0, iw, 0.0) * np.where(ih > 0.0, ih, 0.0)
    union = (a[:, 2] * a[:, 3])[:, None] + (b[:, 2] * b[:, 3])[None, :] - inter
    out = np.zeros((n, m))
    pos = union > 0.0
    out[pos] = np.minimum(inter[pos] / union[pos], 1.0)
    same = (ax1 == bx1) & (ay1 == by1) & (a[:, 2][:, None] == b[:, 2][None, :]) & (
        a[:, 3][:, None] == b[:, 3][None, :]
    )
    out[same] = 1.0
    return out


def greedy_match(ious, threshold):
    """Greedy row-major matching over an (N, M) IoU matrix.

    Rows are visited in order (callers pre-sort detections by confidence);
    each row takes the unmatched column with the highest IoU >= threshold,
    ties going to the lowest column index. Returns the matched column per
    row, -1 when unmatched.
    """
    ious = np.ascontiguousarray(ious, dtype=np.float64)
    n, m = ious.shape
    matched = np.full(n, -1, dtype=np.intp)
    used = np.zeros(m, dtype=bool)
    for i in range(n):
        row = ious[i]
        cand = np.nonzero(~used & (row >= threshold) & (row > 0.0))[0]
        if cand.size:
            j = cand[np.argmax(row[cand])]
            matched[i] = j
            used[j] = True
    return matched


def envelope_101(recall, precision):
    """Interpolated precision at the 101 recall grid points.

    For each grid point r the envelope is the maximum precision over all
    curve points with recall >= r (0 past the end of the curve). ``recall``
    must be non-decreasing.
    """
    recall = np.ascontiguousarray(recall, dtype=np.float64)
    precision = np.ascontiguousarray(precision, dtype=np.float64)
    n = recall.shape[0]
    env = np.zeros(101)
    if n == 0:
        return env
    max_from = np.maximum.accumulate(precision[::-1])[::-1]
    idx = np.searchsorted(recall, RECALL_GRID, side="left")
    hit = idx < n
    env[hit] = max_from[idx[hit]]
    return env
