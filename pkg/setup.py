"""Build the optional MPFR orbit kernel; the package works without it."""

import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("FLATSPOT_PURE_PYTHON"):
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "flatspot._kernel",
                ["src/flatspot/_kernel.pyx"],
                libraries=["mpfr", "gmp"],
                extra_compile_args=["-O2"],
                optional=True,
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
