"""Build script for the optional compiled SSIM kernel.

The package works without the extension (a numpy fallback is selected at
import time); the extension just makes windowed-moment computation faster
on large images.
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "venus._kernels._ssim_cy",
                ["src/venus/_kernels/_ssim_cy.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
