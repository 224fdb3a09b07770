"""Build script: compiles the optional Cython kernel extension.

The package works without the extension (pure numpy fallback is selected
at import time), so the build is marked optional and a compile failure
does not break installation.
"""

from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "hesskit._kernels._cyk",
                ["src/hesskit/_kernels/_cyk.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
