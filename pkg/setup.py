from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; richkde falls back to numpy kernels
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("richkde._kernels", ["src/richkde/_kernels.pyx"], optional=True)],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
