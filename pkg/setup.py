"""Build hook for the optional compiled mesh kernels.

The package is fully functional without the extension: meshkit selects a
pure-Python (numpy) fallback at import time when the compiled module is
missing. Set HERITAGE3D_SKIP_EXT=1 to skip compilation entirely.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("HERITAGE3D_SKIP_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "heritage3d.meshkit._kernels",
                    ["src/heritage3d/meshkit/_kernels.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
