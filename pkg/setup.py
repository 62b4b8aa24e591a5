import os
import sys

from setuptools import setup

ext_modules = []
if os.environ.get("PREFRANK_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            ["src/prefrank/_kernels.pyx"],
            compiler_directives={"language_level": "3"},
        )
    except Exception as exc:  # pragma: no cover - build-env dependent
        sys.stderr.write(
            f"prefrank: skipping compiled kernels ({exc}); "
            "pure-Python fallback will be used\n"
        )

setup(ext_modules=ext_modules)
