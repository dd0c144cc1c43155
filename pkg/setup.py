import sys

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "rmg._kernels._core",
                ["src/rmg/_kernels/_core.pyx"],
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
else:
    print(
        "Cython not available; building without the compiled kernel "
        "(the pure-Python lane will be used at runtime).",
        file=sys.stderr,
    )

setup(ext_modules=ext_modules)
