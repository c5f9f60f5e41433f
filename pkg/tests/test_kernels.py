"""Both kernel backends agree; the compiled one is active after a normal build."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from catsim import _kernels
from catsim.predictor import train_model_tree

py = _kernels.python_backend
cy = _kernels.compiled_backend
needs_cy = pytest.mark.skipif(cy is None, reason="compiled extension not built")


def test_backend_flag():
    assert _kernels.BACKEND in ("cython", "python")
    assert (_kernels.BACKEND == "cython") == (cy is not None)


@needs_cy
@given(st.integers(0, 10_000), st.integers(2, 80), st.integers(1, 4), st.integers(1, 10), st.booleans())
def test_best_split_agrees(seed, n, d, min_leaf, ties):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    if ties:
        X = np.round(X)
    y = rng.normal(size=n) + X[:, 0]
    a, b = py.best_split(X, y, min_leaf), cy.best_split(X, y, min_leaf)
    assert a[0] == b[0]
    if a[0] >= 0:
        assert a[1] == b[1]
        assert a[2] == pytest.approx(b[2], abs=1e-12)


@needs_cy
@given(st.integers(0, 10_000), st.integers(2, 30))
def test_projection_agrees(seed, k):
    rng = np.random.default_rng(seed)
    pts = np.cumsum(rng.normal(scale=20, size=(k, 2)), axis=0) + np.arange(k)[:, None] * 1e-3
    cum = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(pts, axis=0).T))])
    x, y = rng.normal(scale=50, size=2)
    a, b = py.project_polyline(pts, cum, x, y), cy.project_polyline(pts, cum, x, y)
    assert a[2] == b[2]
    assert a[0] == pytest.approx(b[0], abs=1e-9) and a[1] == pytest.approx(b[1], abs=1e-9)


@needs_cy
def test_tree_predict_agrees():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(500, 6))
    y = np.where(X[:, 0] > 0, X[:, 1], -X[:, 2]) + 0.01 * rng.normal(size=500)
    m = train_model_tree((X, y))
    Q = rng.normal(size=(1000, 6))
    args = (m.feature, m.threshold, m.left, m.right, m.coef, m.intercept, Q)
    assert np.allclose(py.tree_predict(*args), cy.tree_predict(*args), rtol=0, atol=1e-12)
    assert np.allclose(m.predict_raw(Q), [m.predict_one(list(q)) for q in Q], atol=1e-12)


@needs_cy
def test_readonly_inputs_accepted():
    pts = np.array([[0.0, 0.0], [10.0, 0.0]])
    cum = np.array([0.0, 10.0])
    pts.flags.writeable = False
    cum.flags.writeable = False
    assert cy.project_polyline(pts, cum, 5.0, 1.0)[0] == 5.0


def test_pure_python_env_switch():
    import subprocess
    import sys
    out = subprocess.run([sys.executable, "-c", "import catsim; print(catsim.BACKEND)"],
                         env={"CATSIM_PURE_PYTHON": "1", "PATH": ""}, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
