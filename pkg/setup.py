import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if os.environ.get("TWOSPIKE_NO_EXT", "") in ("", "0"):
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "twospike._ckernel",
                ["src/twospike/_ckernel.pyx"],
                include_dirs=[np.get_include()],
                # no FMA contraction: keeps results identical to the Python fallback
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
