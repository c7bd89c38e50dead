"""Build script for the optional compiled kernels.

Metadata lives in pyproject.toml.  When Cython or a compiler is missing the
package installs without the extension and falls back to numpy kernels.
"""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("MAASSLAB_NO_EXT", "") in ("", "0"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "maasslab._ckernels",
                    ["src/maasslab/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
