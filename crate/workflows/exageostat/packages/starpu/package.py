from spack.package import *


class Starpu(AutotoolsPackage):
    """Task programming library for hybrid architectures."""

    homepage = "https://starpu.gitlabpages.inria.fr/"
    version("1.3.9", sha256="0000000000000000000000000000000000000000000000000000000000000000")
    variant("mpi", default=True, description="StarPU-MPI")
    depends_on("hwloc")
    depends_on("mpi", when="+mpi")
