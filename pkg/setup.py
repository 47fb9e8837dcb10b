"""Build script.

The compiled kernel extension is optional: if Cython or a C toolchain is
missing, the install falls back to the pure NumPy kernels selected at
import time by ``perovdp._kernels``.
"""

import sys

from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "perovdp._kernels._core",
                ["src/perovdp/_kernels/_core.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError as exc:  # pragma: no cover - toolchain-dependent
    sys.stderr.write(f"perovdp: building without compiled kernels ({exc})\n")

setup(ext_modules=ext_modules)
