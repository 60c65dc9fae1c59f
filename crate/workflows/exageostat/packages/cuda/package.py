from spack.package import *


class Cuda(Package):
    """NVIDIA CUDA toolkit."""

    version("12.2", sha256="0000000000000000000000000000000000000000000000000000000000000000")
