"""Build the optional compiled kernel extension.

The package works without it (torapot.kernels falls back to a pure
numpy implementation), so a failing C toolchain only costs speed.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "torapot._core",
                ["src/torapot/_core.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except Exception as exc:  # pragma: no cover - toolchain-dependent
    print(f"torapot: skipping compiled kernels ({exc}); pure-python fallback will be used")

setup(ext_modules=ext_modules)
