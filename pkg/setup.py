"""Build script for the optional compiled kernels.

The package is pure Python except for ``stbeam._kernels``, a Cython
extension that accelerates the repetition-interval grid search inside the
Monte Carlo engine.  If Cython or a C compiler is unavailable the build
falls back to the pure-numpy implementation in ``stbeam._kernels_py``;
the package selects whichever is importable at runtime.
"""

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Build the extension if possible, warn and continue otherwise."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            print(f"warning: compiled kernels skipped ({exc}); "
                  "using pure-Python fallback")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: could not build {ext.name} ({exc}); "
                  "using pure-Python fallback")


try:
    from Cython.Build import cythonize
    ext_modules = cythonize(
        [Extension("stbeam._kernels", ["src/stbeam/_kernels.pyx"])],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules, cmdclass={"build_ext": optional_build_ext})
