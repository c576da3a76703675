"""Builds the compiled decoder when Cython is available.

The package works without it; the chunker falls back to a numpy
implementation of the same algorithm at import time.
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/losr/_viterbi.pyx"],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
