import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("RANKOPT_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [Extension("rankopt._kernels", ["src/rankopt/_kernels.pyx"])],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )
    except ImportError:
        # no Cython at build time: install with the pure-python backend only
        ext_modules = []

setup(ext_modules=ext_modules)
