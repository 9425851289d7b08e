import os

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; _backend falls back to numpy
    cythonize = None

ext_modules = []
if cythonize is not None and not os.environ.get("BICM4D_NO_EXT"):
    ext_modules = cythonize(
        [
            Extension(
                "bicm4d._kernels",
                ["src/bicm4d/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                # compile-time only: linking with -ffast-math would set
                # flush-to-zero for the whole interpreter
                extra_compile_args=["-O3", "-ffast-math"] + (["-march=native"] if os.environ.get("BICM4D_NATIVE") else []),
                libraries=["m", "mvec"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": 3},
    )

setup(ext_modules=ext_modules)
