"""Independent reference computations used to derive frozen test values.

Nothing here imports catsim. Each oracle is the slow, obvious version of
a package routine: dense walks instead of projection algebra, exhaustive
split scans instead of cumulative sums, plain least squares.
"""

import math

import numpy as np


def rsrq(n_prb, rsrp, rssi):
    return 10.0 * math.log10(n_prb) + rsrp - rssi


def theta(phi, lo, hi):
    return min(max((phi - lo) / (hi - lo), 0.0), 1.0)


def cat_p(th, dt, t_min, t_max, alpha, at_max=False):
    if dt <= t_min:
        return 0.0
    if dt > t_max or at_max:
        return 1.0
    return th ** alpha


def z_factor(dphi, th, beta):
    if dphi > 0:
        return max(abs(dphi * (1 - th) * beta), 1.0)
    return 1.0 / max(abs(dphi * th * beta), 1.0)


def tx_power(p_max, p0, m, alpha, pl, delta_mcs=0.0, delta=0.0):
    return min(p_max, p0 + 10.0 * math.log10(m) + alpha * pl + delta_mcs + delta)


# -- mobility ---------------------------------------------------------------

def densify(points, step=0.01):
    """Points every ``step`` meters of arc length (plus every vertex)."""
    pts = np.asarray(points, dtype=float)
    out = [pts[:1]]
    for a, b in zip(pts[:-1], pts[1:]):
        length = math.hypot(*(b - a))
        k = max(1, int(math.ceil(length / step)))
        t = np.arange(1, k + 1) / k
        out.append(a + (b - a) * t[:, None])
    dense = np.concatenate(out)
    arc = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(dense, axis=0).T))])
    return dense, arc


def walk(points, position, v, tau, step=0.01):
    """Snap to the nearest dense point, then walk ``v * tau`` meters of arc."""
    dense, arc = densify(points, step)
    i = int(np.argmin(np.hypot(dense[:, 0] - position[0], dense[:, 1] - position[1])))
    target = arc[i] + v * tau
    if target >= arc[-1]:
        return tuple(float(c) for c in dense[-1])
    j = int(np.argmin(np.abs(arc - target)))
    return tuple(float(c) for c in dense[j])


# -- model tree ---------------------------------------------------------------

def sdr_candidates(X, y, min_leaf):
    """Every admissible split with its standard-deviation reduction."""
    n, d = X.shape
    sd = np.std(y)
    out = []
    for j in range(d):
        values = np.unique(X[:, j])
        for lo, hi in zip(values[:-1], values[1:]):
            thr = 0.5 * (lo + hi)
            left = X[:, j] <= thr
            nl = int(left.sum())
            if nl < min_leaf or n - nl < min_leaf:
                continue
            red = sd - nl / n * np.std(y[left]) - (n - nl) / n * np.std(y[~left])
            out.append((red, j, thr))
    return out


def lstsq_fit(X, y):
    A = np.column_stack([X, np.ones(len(y))])
    sol, *_ = np.linalg.lstsq(A, y, rcond=None)
    return sol[:-1], sol[-1]


# -- simulation ---------------------------------------------------------------

def aoi(gen_times, reception):
    return sum(reception - t for t in gen_times) / len(gen_times)
