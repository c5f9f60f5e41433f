"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints one line per kernel with the best-of-N wall time for each backend
and the speedup. Inputs are seeded so runs are comparable.
"""

import argparse
import timeit

import numpy as np

from catsim import _kernels
from catsim.predictor import train_model_tree


def split_case(rng, n=2000, d=6):
    X = rng.normal(size=(n, d))
    y = X @ rng.normal(size=d) + np.where(X[:, 0] > 0, 3.0, -3.0) + 0.1 * rng.normal(size=n)
    return (X, y, 10)


def projection_case(rng, n_points=500):
    pts = np.cumsum(rng.normal(scale=50.0, size=(n_points, 2)), axis=0)
    cum = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(pts, axis=0).T))])
    return (pts, cum, float(pts[n_points // 2, 0]) + 3.0, float(pts[n_points // 2, 1]) - 4.0)


def tree_case(rng, n=20000):
    X, y, _ = split_case(rng)
    m = train_model_tree((X, y))
    Xq = rng.normal(size=(n, X.shape[1]))
    return (m.feature, m.threshold, m.left, m.right, m.coef, m.intercept, Xq)


def bench(fn, args, repeat, number):
    return min(timeit.repeat(lambda: fn(*args), repeat=repeat, number=number)) / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    cases = {
        "best_split (n=2000, d=6)": ("best_split", split_case(rng), 5),
        "project_polyline (500 pts)": ("project_polyline", projection_case(rng), 200),
        "tree_predict (20000 rows)": ("tree_predict", tree_case(rng), 5),
    }
    py, cy = _kernels.python_backend, _kernels.compiled_backend
    if cy is None:
        print("compiled backend not available; timing the numpy fallback only")
    print(f"{'kernel':<30} {'python [ms]':>12} {'cython [ms]':>12} {'speedup':>8}")
    for label, (name, case, number) in cases.items():
        t_py = bench(getattr(py, name), case, args.repeat, number) * 1e3
        if cy is None:
            print(f"{label:<30} {t_py:>12.3f} {'-':>12} {'-':>8}")
            continue
        t_cy = bench(getattr(cy, name), case, args.repeat, number) * 1e3
        print(f"{label:<30} {t_py:>12.3f} {t_cy:>12.3f} {t_py / t_cy:>7.1f}x")


if __name__ == "__main__":
    main()
