"""Builds the `hyperprove_py` extension module by delegating to cargo.

The Rust cdylib crate lives in crates/py; this build step compiles it in
release mode and copies the shared library to wherever setuptools expects
the extension. Install with `pip install -e . --no-build-isolation`.
"""

import shutil
import subprocess
import sys
from pathlib import Path

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext

ROOT = Path(__file__).resolve().parent


class CargoBuildExt(build_ext):
    def build_extension(self, ext):
        subprocess.run(
            ["cargo", "build", "--release", "-p", "hyperprove-py"],
            cwd=ROOT,
            check=True,
        )
        if sys.platform == "darwin":
            lib = ROOT / "target" / "release" / "libhyperprove_py.dylib"
        elif sys.platform == "win32":
            lib = ROOT / "target" / "release" / "hyperprove_py.dll"
        else:
            lib = ROOT / "target" / "release" / "libhyperprove_py.so"
        dest = Path(self.get_ext_fullpath(ext.name))
        dest.parent.mkdir(parents=True, exist_ok=True)
        shutil.copy2(lib, dest)


setup(
    ext_modules=[Extension("hyperprove_py", sources=[])],
    cmdclass={"build_ext": CargoBuildExt},
)
