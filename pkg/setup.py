import os

import numpy as np
from setuptools import Extension, setup

# The compiled kernels are optional: if Cython or a C compiler is missing the
# package falls back to the numpy implementations selected at import time.
ext_modules = []
try:
    from Cython.Build import cythonize

    openmp = os.environ.get("VRLAB_NO_OPENMP", "") == ""
    compile_args = ["-O3"]
    link_args = []
    if openmp:
        compile_args.append("-fopenmp")
        link_args.append("-fopenmp")
    ext = Extension(
        "vrlab._core._kernels",
        ["src/vrlab/_core/_kernels.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=compile_args,
        extra_link_args=link_args,
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    ext_modules = cythonize([ext], language_level=3)
except ImportError:
    pass

setup(ext_modules=ext_modules)
