"""Build script: compiles the numeric kernels to a C extension when Cython is
available.  The package stays importable without the extension; the same
source file then runs interpreted (see diffcd._core)."""

import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("DIFFCD_NO_EXT"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [Extension("diffcd._core._kernels", ["src/diffcd/_core/_kernels.py"])],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
                "initializedcheck": False,
            },
        )
    except ImportError:
        pass

setup(ext_modules=ext_modules)
