import os

from setuptools import setup

ext_modules = []
if os.environ.get("STOQSIM_PURE_PYTHON") != "1":
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "stoqsim._core",
                    ["src/stoqsim/_core.pyx"],
                    include_dirs=[numpy.get_include()],
                    # -ffp-contract=off keeps float results bit-identical to the
                    # pure-Python fallback (no FMA contraction).
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        # No Cython / compiler available: install with the pure-Python kernels.
        ext_modules = []

setup(ext_modules=ext_modules)
