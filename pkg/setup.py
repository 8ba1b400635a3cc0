"""Build the optional compiled kernels; the package works without them."""

import os

from setuptools import Extension, setup


def extensions():
    if os.environ.get("CONEDIFF_NO_EXT"):
        return []
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "conediff._ckernels",
        ["src/conediff/_ckernels.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=extensions())
