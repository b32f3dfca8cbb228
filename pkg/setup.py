"""Build script for the optional compiled labeling kernel.

The package is fully functional without the extension; ``stprobe.kernels``
falls back to the pure-Python implementation at import time.  Build the
extension in place with::

    python setup.py build_ext --inplace
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/stprobe/_labeling_cy.pyx"],
        language_level="3",
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
