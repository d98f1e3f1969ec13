"""Build script for the optional compiled kernels.

The Cython extension is built when Cython and a C compiler are available;
otherwise the package installs in pure-Python mode and falls back to
``tangentmap._pykernels`` at import time.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("TANGENTMAP_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "tangentmap._kernels",
                    ["src/tangentmap/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    # no -ffast-math / no contraction: the compiled path must
                    # round exactly like the Python fallback
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
                "initializedcheck": False,
            },
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
