from spack.package import *


class Exageostat(CMakePackage):
    """Geostatistics on large spatial datasets: MLE, kriging and TLR approximation."""

    homepage = "https://github.com/ecrc/exageostat"
    git = "https://github.com/ecrc/exageostat.git"

    version("1.2.0", tag="v1.2.0")

    variant("mpi", default=True, description="Distributed-memory support")
    variant("cuda", default=False, description="GPU kernels")

    depends_on("chameleon")
    depends_on("hicma", when="+mpi")
    depends_on("starpu")
    depends_on("nlopt")
    depends_on("gsl")
    depends_on("mpi", when="+mpi")
    depends_on("cuda", when="+cuda")

    def cmake_args(self):
        return [
            self.define_from_variant("EXAGEOSTAT_USE_MPI", "mpi"),
            self.define_from_variant("EXAGEOSTAT_USE_CUDA", "cuda"),
        ]
