from spack.package import *


class Mpich(AutotoolsPackage):
    """MPICH."""

    version("4.1", sha256="0000000000000000000000000000000000000000000000000000000000000000")
    provides("mpi")
