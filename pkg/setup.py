import os
import sys

import numpy as np
from setuptools import Extension, setup


def extensions():
    if os.environ.get("LOGLQR_PURE_PYTHON") == "1":
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        print("Cython not available; installing the pure-Python kernel only", file=sys.stderr)
        return []
    ext = Extension(
        "loglqr._kernels",
        ["src/loglqr/_kernels.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


try:
    setup(ext_modules=extensions())
except Exception as exc:  # compiler missing or broken: fall back to pure Python
    print(f"building the compiled kernel failed ({exc}); using the pure-Python kernel", file=sys.stderr)
    setup(ext_modules=[])
