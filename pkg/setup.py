from setuptools import setup

try:
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [Extension("cmetas._kernels", ["src/cmetas/_kernels.pyx"])],
        language_level=3,
    )
except ImportError:
    # no Cython: the package falls back to its numpy kernels
    ext_modules = []

setup(ext_modules=ext_modules)
