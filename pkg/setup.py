"""Build script: compiles the optional Cython kernel extension.

The package is fully functional without the extension (a numpy fallback is
selected at import time), so any failure here degrades to a pure-Python
build instead of aborting the install.
"""

import os

from setuptools import Extension, setup


def _extensions():
    try:
        import numpy as np
        import numpy.random
        from Cython.Build import cythonize
    except ImportError:
        return []

    npyrandom_dir = os.path.join(os.path.dirname(numpy.random.__file__), "lib")
    ext = Extension(
        "photon_ofdm._kernels._core",
        ["src/photon_ofdm/_kernels/_core.pyx"],
        include_dirs=[np.get_include()],
        library_dirs=[npyrandom_dir],
        libraries=["npyrandom"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        # -ffp-contract=off forbids FMA contraction so float results stay
        # bit-identical with the numpy fallback backend.
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
    try:
        return cythonize([ext], language_level=3)
    except Exception:
        return []


setup(ext_modules=_extensions())
