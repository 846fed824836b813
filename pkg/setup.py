from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None


def get_extensions():
    if cythonize is None:
        return []
    ext = Extension(
        "spmdgrid._ckernel",
        ["src/spmdgrid/_ckernel.pyx"],
        # no -ffast-math: NaN/inf semantics and bit-exactness matter here
        extra_compile_args=["-O2", "-ffp-contract=off"],
        optional=True,
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=get_extensions())
