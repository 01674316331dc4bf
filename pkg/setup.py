"""Build script: compiles the optional fast-kernel extension.

The package is fully functional without the extension (a pure-Python/numpy
fallback is selected at import time), so a failed compile only costs speed.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "devlab._kernels._native",
                ["src/devlab/_kernels/_native.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    print("Cython not available; building without the native kernel extension")

setup(ext_modules=ext_modules)
