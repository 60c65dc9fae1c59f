from spack.package import *


class Nlopt(CMakePackage):
    """Nonlinear optimization library."""

    version("2.7.0", sha256="0000000000000000000000000000000000000000000000000000000000000000")
