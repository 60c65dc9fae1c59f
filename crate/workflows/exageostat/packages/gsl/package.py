from spack.package import *


class Gsl(AutotoolsPackage):
    """GNU Scientific Library."""

    version("2.7", sha256="0000000000000000000000000000000000000000000000000000000000000000")
