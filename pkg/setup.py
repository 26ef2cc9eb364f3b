"""Build script: compiles the optional Cython kernel extension.

The package works without the extension (pure-numpy fallback is selected
at import time); building it just makes the training hot loop faster.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "reflab.grad.kernels._ckern",
                ["src/reflab/grad/kernels/_ckern.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
