"""Build hook for the optional compiled auction kernel.

The package works without the extension; `cogmarket._backend` falls back to
the numpy implementation when the compiled module is missing.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext = Extension(
        "cogmarket._auction_core",
        ["src/cogmarket/_auction_core.pyx"],
    )
    ext.optional = True  # build failure must not break a pure-python install
    ext_modules = cythonize([ext], language_level=3)

setup(ext_modules=ext_modules)
