"""Build script for the optional Cython kernels.

If Cython or a C compiler is missing the package still installs; the
pure-numpy kernels in ``harseq._pykernels`` are used instead.
"""
import sys

from setuptools import setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # pragma: no cover - toolchain dependent
            print(f"warning: skipping compiled kernels ({exc})", file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # pragma: no cover - toolchain dependent
            print(f"warning: failed to build {ext.name} ({exc})", file=sys.stderr)


def extensions():
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        return []
    exts = cythonize(
        "src/harseq/_ckernels.pyx",
        language_level="3",
        compiler_directives={
            "boundscheck": False,
            "wraparound": False,
            "initializedcheck": False,
            "cdivision": True,
        },
    )
    for ext in exts:
        ext.include_dirs.append(np.get_include())
        ext.extra_compile_args.append("-O3")
    return exts


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
