from spack.package import *


class Hwloc(AutotoolsPackage):
    """Portable hardware locality."""

    version("2.9.1", sha256="0000000000000000000000000000000000000000000000000000000000000000")
