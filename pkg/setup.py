# python -m pip install -e . --no-build-isolation
# The Cython core is optional: without Cython/compiler the numpy fallback is used.
import os

from setuptools import setup

ext_modules = []
if os.environ.get("CDWCE_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "cdwce._kernels_cy",
                    ["src/cdwce/_kernels_cy.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
