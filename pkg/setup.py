"""Build script: compiles the optional kernel extension.

The package works without the extension (a numpy fallback is selected at
import time), so a failed compile downgrades to a pure-Python install
instead of aborting. Set CHKIT_REQUIRE_EXT=1 to make compile failures fatal.
"""

import os
import sys

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "chkit.kernels._compiled",
                ["src/chkit/kernels/_compiled.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # noqa: BLE001 - any build-chain failure downgrades
    if os.environ.get("CHKIT_REQUIRE_EXT"):
        raise
    print(f"chkit: skipping compiled kernels ({exc!r}); "
          "pure-Python fallback will be used", file=sys.stderr)

setup(ext_modules=ext_modules)
