import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "lanerl._speedups",
        ["src/lanerl/_speedups.pyx"],
        include_dirs=[np.get_include()],
        # associative-math lets the compiler vectorize the dot-product
        # reductions; unlike full -ffast-math it keeps NaN/Inf semantics,
        # which sgd_update's divergence check relies on
        extra_compile_args=[
            "-O3",
            "-funroll-loops",
            "-march=native",
            "-fassociative-math",
            "-fno-signed-zeros",
            "-fno-trapping-math",
        ],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}))
