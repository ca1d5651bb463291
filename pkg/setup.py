import numpy as np
from setuptools import setup

# The compiled kernels are optional: if Cython or a C compiler is missing the
# package falls back to the pure numpy implementations at import time.
ext_modules = []
try:
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "forestdiff.kernels._native",
                ["src/forestdiff/kernels/_native.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except Exception as err:  # pragma: no cover
    print("skipping compiled kernels: %s" % err)

setup(ext_modules=ext_modules)
