from spack.package import *


class Chameleon(CMakePackage):
    """Dense linear algebra on top of task-based runtimes."""

    homepage = "https://solverstack.gitlabpages.inria.fr/chameleon/"
    version("1.1.0", sha256="0000000000000000000000000000000000000000000000000000000000000000")

    variant("mpi", default=True, description="Distributed-memory support")
    depends_on("starpu")
    depends_on("blas")
    depends_on("lapack")
    depends_on("mpi", when="+mpi")
