import os

from setuptools import setup

ext_modules = []
if os.environ.get("MA_NO_EXTENSION", "") in ("", "0"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        print("Cython/numpy unavailable at build time; installing pure-Python kernels only")
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "monge_ampere._ckernels",
                    ["src/monge_ampere/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
