"""Build the optional compiled kernel extension.

The package is fully functional without it (a NumPy fallback is selected
at import time), so the extension is skipped when Cython is unavailable.
"""

from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "constmap.kernels._cython",
                ["src/constmap/kernels/_cython.pyx"],
                include_dirs=[np.get_include()],
                # -ffp-contract=off keeps the hard forward paths bit-identical
                # to the NumPy backend (no FMA contraction).
                extra_compile_args=["-O3", "-ffp-contract=off"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
