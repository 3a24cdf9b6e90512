import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = []
if cythonize is not None and not os.environ.get("CFIKIT_NO_EXT"):
    extensions = cythonize(
        [Extension("cfikit._ckernels", ["src/cfikit/_ckernels.pyx"],
                   include_dirs=[np.get_include()])],
        compiler_directives={"language_level": 3},
    )

setup(ext_modules=extensions)
