"""CMake shim: builds the pybind11 module _core and drops it into the package.

setuptools owns the install; CMake owns the compile. The extension has no
Python-visible sources, so build_ext is the only hook that matters.
"""

import subprocess
import sys
from pathlib import Path

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class CMakeExtension(Extension):
    def __init__(self, name: str):
        super().__init__(name, sources=[])


class CMakeBuild(build_ext):
    def build_extension(self, ext: CMakeExtension) -> None:
        source_dir = Path(__file__).resolve().parent
        cmake_dir = Path(self.build_temp).resolve() / "cmake"
        cmake_dir.mkdir(parents=True, exist_ok=True)

        subprocess.run(
            [
                "cmake",
                "-S", str(source_dir),
                "-B", str(cmake_dir),
                "-DCMAKE_BUILD_TYPE=Release",
                "-DFORCHFLOW_PYTHON=ON",
                f"-DPython3_EXECUTABLE={sys.executable}",
            ],
            check=True,
        )
        subprocess.run(
            ["cmake", "--build", str(cmake_dir), "--target", "_core", "-j"],
            check=True,
        )

        built = sorted(cmake_dir.glob("_core*.so"))
        if not built:
            raise RuntimeError(f"cmake did not produce _core in {cmake_dir}")
        target = Path(self.get_ext_fullpath(ext.name))
        target.parent.mkdir(parents=True, exist_ok=True)
        self.copy_file(str(built[-1]), str(target))


setup(
    ext_modules=[CMakeExtension("forchflow._core")],
    cmdclass={"build_ext": CMakeBuild},
)
