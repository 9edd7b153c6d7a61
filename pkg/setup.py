import os

import numpy as np
from setuptools import Extension, setup

extensions = []
if os.environ.get("RICLINK_PURE", "") in ("", "0"):
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "riclink._ext",
                ["src/riclink/_ext.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                # keep a*b+c exact so results match the numpy backend bit for bit
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=extensions)
