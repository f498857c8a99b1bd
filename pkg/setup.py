"""Build script: compiles the optional Cython rollout kernel.

The package works without the extension (a pure-Python kernel is selected
at import time), so any compilation failure only costs speed, not features.
Build in place for development with:

    python setup.py build_ext --inplace
"""

import warnings

from setuptools import setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the extension if possible; fall back to pure Python otherwise."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            warnings.warn(f"C extension build skipped ({exc}); "
                          "pneusid will use the pure-Python kernel")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn(f"building {ext.name} failed ({exc}); "
                          "pneusid will use the pure-Python kernel")


try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/pneusid/_rollout.pyx"],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules, cmdclass={"build_ext": OptionalBuildExt})
