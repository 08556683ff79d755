from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

# The compiled kernels are optional: without a compiler (or Cython) the
# package falls back to the pure numpy implementations at import time.
extensions = [
    Extension(
        "trafficlens._kernels._native",
        ["src/trafficlens/_kernels/_native.pyx"],
        extra_compile_args=["-O3"],
        optional=True,
    )
]

setup(
    ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"})
    if cythonize
    else []
)
