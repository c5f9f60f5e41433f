import os

import numpy
from setuptools import Extension, setup

# Building the compiled core is optional: the package falls back to the
# numpy implementation in catsim._kernels._pykernels when it is absent.
ext_modules = []
if os.environ.get("CATSIM_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "catsim._kernels._ckernels",
                    ["src/catsim/_kernels/_ckernels.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            language_level="3",
            compiler_directives={"boundscheck": False, "wraparound": False, "cdivision": True},
        )

setup(ext_modules=ext_modules)
