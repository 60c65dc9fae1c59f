from spack.package import *


class Hicma(CMakePackage):
    """Hierarchical tile low-rank matrix computations."""

    homepage = "https://github.com/ecrc/hicma"
    version("1.0.0", tag="v1.0.0")
    depends_on("starpu")
    depends_on("chameleon")
