import os

from pybind11.setup_helpers import Pybind11Extension, build_ext
from setuptools import setup

eigen = os.environ.get("EIGEN3_INCLUDE_DIR", "/usr/include/eigen3")

ext = Pybind11Extension(
    "owcrs._core",
    sources=[
        "python/bindings.cpp",
        "src/channel.cpp",
        "src/config.cpp",
        "src/dataset.cpp",
        "src/dnn.cpp",
        "src/experiments.cpp",
        "src/grouping.cpp",
        "src/optimizer.cpp",
        "src/rs_model.cpp",
    ],
    include_dirs=["include", "vendor", eigen],
    cxx_std=20,
)

setup(
    packages=["owcrs"],
    package_dir={"owcrs": "python/owcrs"},
    ext_modules=[ext],
    cmdclass={"build_ext": build_ext},
)
