"""Builds the optional compiled kernel extension.

The package works without it (a numpy fallback is selected at import);
compiling just makes whole-coverage scans and buffer aggregation faster.
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "geosensordb.kernels._ckernels",
                ["src/geosensordb/kernels/_ckernels.pyx"],
                include_dirs=[numpy.get_include()],
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
    extensions = []

setup(ext_modules=extensions)
