"""Builds the optional Cython kernel extension.

The package works without the extension (a NumPy implementation of the same
kernels is selected at import time), so a failed build only costs speed.
"""
import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("MIXTRIAL_NO_EXT") != "1":
    try:
        import numpy
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "mixtrial._core_cy",
                    sources=["src/mixtrial/_core_cy.pyx"],
                    include_dirs=[numpy.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
