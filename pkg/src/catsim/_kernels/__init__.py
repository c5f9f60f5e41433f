"""Hot-loop kernels with a compiled backend and a numpy fallback.

The compiled extension is used when it was built and imports cleanly;
``CATSIM_PURE_PYTHON=1`` forces the fallback.
"""

import os

from . import _pykernels as python_backend

compiled_backend = None
if os.environ.get("CATSIM_PURE_PYTHON") != "1":
    try:
        from . import _ckernels as compiled_backend
    except ImportError:  # extension not built
        compiled_backend = None

_active = compiled_backend if compiled_backend is not None else python_backend
BACKEND = "cython" if compiled_backend is not None else "python"

best_split = _active.best_split
project_polyline = _active.project_polyline
tree_predict = _active.tree_predict

__all__ = [
    "BACKEND",
    "best_split",
    "compiled_backend",
    "project_polyline",
    "python_backend",
    "tree_predict",
]
