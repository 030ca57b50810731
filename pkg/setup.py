from setuptools import Extension, setup
from Cython.Build import cythonize
import numpy as np

# Compiled event-loop kernels. The package falls back to the pure-Python
# twin (hetq.sim._engine_py) if this extension is missing at import time.
ext = Extension(
    "hetq.sim._engine",
    ["src/hetq/sim/_engine.pyx"],
    include_dirs=[np.get_include()],
    extra_compile_args=["-O3"],
)

setup(
    ext_modules=cythonize(
        [ext],
        compiler_directives={"language_level": "3"},
    )
)
