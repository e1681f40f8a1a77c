import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("NTHCOEFF_NO_EXT", "") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [Extension("nthcoeff._kernels", ["src/nthcoeff/_kernels.pyx"])],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
