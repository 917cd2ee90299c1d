"""Build script for the optional compiled kernel extension.

The package is pure Python plus one Cython extension (qproj.kernels._core)
holding the hot batched head forward/backward loops.  If Cython or a C
compiler is unavailable the build falls back to the pure NumPy kernels;
set QPROJ_SKIP_EXT=1 to skip the extension build explicitly.
"""

import os

from setuptools import setup

ext_modules = []
if not os.environ.get("QPROJ_SKIP_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "qproj.kernels._core",
                    ["src/qproj/kernels/_core.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={
                "language_level": 3,
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
