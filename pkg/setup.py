"""Build hook for the optional compiled geometry kernels.

Without Cython (or a C compiler) the package installs with the pure-Python
kernels only.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("mapplan.geometry._geom", ["src/mapplan/geometry/_geom.pyx"], extra_compile_args=["-O3"])],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
