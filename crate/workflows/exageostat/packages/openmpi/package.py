from spack.package import *


class Openmpi(AutotoolsPackage):
    """Open MPI."""

    version("4.1.5", sha256="0000000000000000000000000000000000000000000000000000000000000000")
    version("4", sha256="0000000000000000000000000000000000000000000000000000000000000000")
    provides("mpi")
