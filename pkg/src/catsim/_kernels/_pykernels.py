"""numpy implementations of the hot loops (reference and fallback backend)."""

import numpy as np


def best_split(X, y, min_leaf):
    """Best axis-parallel split by standard-deviation reduction.

    Returns ``(feature, threshold, sdr)``; ``feature`` is -1 when no split
    with both sides holding at least ``min_leaf`` samples reduces the spread.
    Ties keep the lowest feature index, then the lowest threshold.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n, d = X.shape
    best_feature, best_threshold, best_sdr = -1, np.nan, 0.0
    if n < 2 * min_leaf or n < 2:
        return best_feature, best_threshold, best_sdr

    yc = y - np.mean(y)
    total = float(np.sum(yc))
    total2 = float(np.sum(yc * yc))
    sd_all = np.sqrt(max(total2 / n - (total / n) ** 2, 0.0))
    # variances below rounding noise of the running sums count as zero
    var_floor = 1e-12 * total2 / n

    n_left = np.arange(1, n, dtype=np.float64)
    n_right = n - n_left
    for j in range(d):
        order = np.argsort(X[:, j], kind="mergesort")
        xs = X[order, j]
        ys = yc[order]
        cs = np.cumsum(ys)[:-1]
        cs2 = np.cumsum(ys * ys)[:-1]
        var_l = cs2 / n_left - (cs / n_left) ** 2
        var_r = (total2 - cs2) / n_right - ((total - cs) / n_right) ** 2
        var_l = np.where(var_l < var_floor, 0.0, var_l)
        var_r = np.where(var_r < var_floor, 0.0, var_r)
        sdr = sd_all - (n_left / n) * np.sqrt(var_l) - (n_right / n) * np.sqrt(var_r)
        valid = (xs[:-1] < xs[1:]) & (n_left >= min_leaf) & (n_right >= min_leaf)
        if not valid.any():
            continue
        sdr = np.where(valid, sdr, -np.inf)
        i = int(np.argmax(sdr))
        if sdr[i] > best_sdr:
            best_feature = j
            best_threshold = 0.5 * (xs[i] + xs[i + 1])
            best_sdr = float(sdr[i])
    return best_feature, best_threshold, best_sdr


def project_polyline(points, cumdist, px, py):
    """Nearest point on a polyline: ``(arc_length, distance, segment)``."""
    p0 = points[:-1]
    seg = points[1:] - p0
    seg_len2 = np.einsum("ij,ij->i", seg, seg)
    rel = np.array([px, py]) - p0
    t = np.clip(np.einsum("ij,ij->i", rel, seg) / seg_len2, 0.0, 1.0)
    off = rel - seg * t[:, None]
    dist = np.sqrt(np.einsum("ij,ij->i", off, off))
    k = int(np.argmin(dist))
    s = cumdist[k] + t[k] * (cumdist[k + 1] - cumdist[k])
    return float(s), float(dist[k]), k


def tree_predict(feature, threshold, left, right, coef, intercept, X):
    """Evaluate a flattened model tree on every row of ``X``."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    n = X.shape[0]
    node = np.zeros(n, dtype=np.intp)
    rows = np.arange(n)
    while True:
        f = feature[node]
        active = f >= 0
        if not active.any():
            break
        idx = rows[active]
        cur = node[active]
        go_left = X[idx, f[active]] <= threshold[cur]
        node[active] = np.where(go_left, left[cur], right[cur])
    return intercept[node] + np.einsum("ij,ij->i", coef[node], X)
