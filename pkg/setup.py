import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if os.environ.get("MAGWKB_NO_EXT", "") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:  # fallback kernels are used at import time
        pass
    else:
        ext_modules = cythonize(
            [Extension("magwkb._core", ["src/magwkb/_core.pyx"],
                       include_dirs=[np.get_include()],
                       extra_compile_args=["-O3"])],
            compiler_directives={"language_level": 3},
        )

setup(ext_modules=ext_modules)
