import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("ORBITPOOL_PURE_PYTHON", "") not in ("1", "true", "yes"):
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "orbitpool._kernels",
                ["src/orbitpool/_kernels.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
