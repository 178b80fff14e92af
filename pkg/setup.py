"""Build the optional Cython solver kernel.

If Cython or a compiler is unavailable the package still installs; the solver
then falls back to the numpy implementation in ``semiconf.solver._kernel_py``.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("SEMICONF_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "semiconf.solver._kernel",
                    ["src/semiconf/solver/_kernel.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
