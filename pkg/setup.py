from setuptools import Extension, setup
from Cython.Build import cythonize
import numpy as np

# python setup.py build_ext --inplace  (or just `pip install -e . --no-build-isolation`)
ext = Extension(
    "lrsnet._gd_kernel",
    ["src/lrsnet/_gd_kernel.pyx"],
    include_dirs=[np.get_include()],
    extra_compile_args=["-O3", "-ffast-math"],
    extra_link_args=["-lmvec", "-lm"],
)

setup(
    ext_modules=cythonize(
        ext,
        compiler_directives={
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "language_level": 3,
        },
    ),
)
