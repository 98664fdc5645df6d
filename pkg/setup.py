import os

from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    numpy_random_lib = os.path.join(os.path.dirname(np.random.__file__), "lib")
    ext = Extension(
        "tandem_bandits.engine._kernels",
        ["src/tandem_bandits/engine/_kernels.pyx"],
        include_dirs=[np.get_include()],
        library_dirs=[numpy_random_lib],
        libraries=["npyrandom"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
    ext_modules = cythonize([ext], language_level=3)

setup(ext_modules=ext_modules)
