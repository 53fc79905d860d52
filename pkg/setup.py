"""Build script for the optional compiled kernel extension.

The extension accelerates the hot loops (CSR products, scalar prox root
finding, ray tracing). If Cython or a C compiler is unavailable the build
degrades to the pure NumPy/SciPy backend in ``tiksolve._kernels.pykernels``.
"""

import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the extension if possible, otherwise warn and continue."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        print(
            f"WARNING: compiled kernels not built ({exc}); "
            "falling back to the pure Python backend",
            file=sys.stderr,
        )


def _extensions():
    import os

    if not os.path.exists("src/tiksolve/_kernels/_core.pyx"):
        return []
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError as exc:
        OptionalBuildExt._warn(exc)
        return []
    ext = Extension(
        "tiksolve._kernels._core",
        ["src/tiksolve/_kernels/_core.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3", "-fopenmp"],
        extra_link_args=["-fopenmp"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=_extensions(), cmdclass={"build_ext": OptionalBuildExt})
