"""Build hook for the optional compiled simulation kernel.

The package is fully functional without it; ``sddm.oracle`` falls back to a
numpy implementation that produces bit-identical paths.  Set
``SDDM_NO_EXT=1`` to skip compilation.
"""
import os

from setuptools import Extension, setup


def _extensions():
    if os.environ.get("SDDM_NO_EXT"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "sddm._simkernel",
        ["src/sddm/_simkernel.pyx"],
        # no FMA contraction and no -march=native: results must match the
        # numpy fallback bit for bit
        extra_compile_args=["-O3", "-ffp-contract=off", "-fno-fast-math"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=_extensions())
