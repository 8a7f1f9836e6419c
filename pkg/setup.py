"""Build hook for the optional compiled kernels.

The package works without them; ``bellmrf.kernels`` falls back to the pure
Python tables when the extension is missing.
"""

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # no Cython: ship the pure-Python path only
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("bellmrf._kernels", ["src/bellmrf/_kernels.pyx"], include_dirs=[np.get_include()])],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
