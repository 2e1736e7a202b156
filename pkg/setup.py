"""Build script: compiles the optional C kernel, falls back to pure python.

The package works without the extension (cyclotrace._kernel_py implements the
same API); the extension exists because the chain DP inside the estimator is
the one genuinely hot loop. If Cython or a C compiler is missing the install
still succeeds.
"""

from setuptools import setup

try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/cyclotrace/_kernel.pyx"],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
    include_dirs = [numpy.get_include()]
except Exception as exc:  # pragma: no cover - exercised only on broken toolchains
    import sys

    print(f"cyclotrace: building without compiled kernel ({exc})", file=sys.stderr)
    ext_modules = []
    include_dirs = []

setup(ext_modules=ext_modules, include_dirs=include_dirs)
