"""Builds the optional compiled LSTM kernel; the package falls back to
the pure-numpy kernel when the extension cannot be built."""

import sys

from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/muse/kernels/_lstm_cy.pyx"],
        compiler_directives={"language_level": 3},
    )
    for ext in ext_modules:
        ext.include_dirs.append(np.get_include())
        ext.define_macros.append(("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION"))
except ImportError as e:
    print(f"Cython/numpy unavailable ({e}); building without the compiled kernel",
          file=sys.stderr)

setup(ext_modules=ext_modules)
