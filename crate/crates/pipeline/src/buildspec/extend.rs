use super::machine::{MachineDescription, RuntimeSpec};
use super::manifest::{EnvironmentManifest, PackageSpec};
use super::BuildSpecError;

/// Specializes a generic manifest for one machine.
///
/// Every spec gets `target=<architecture>` (replacing any existing target).
/// The machine's MPI and GPU runtimes are pinned: an existing spec of the same
/// name is overridden in place, otherwise a new spec is appended. Original
/// order is kept and the result is a fixed point of this function.
pub fn extend_environment(
    manifest: &EnvironmentManifest,
    machine: &MachineDescription,
) -> Result<EnvironmentManifest, BuildSpecError> {
    let mut specs = manifest.specs.clone();
    for pin in [&machine.mpi, &machine.gpu_runtime].into_iter().flatten() {
        let rt = RuntimeSpec::parse(pin)
            .map_err(|reason| BuildSpecError::InvalidValue { field: "runtime".into(), reason })?;
        match specs.iter_mut().find(|s| s.name == rt.name) {
            Some(existing) => match (&existing.version_constraint, &rt.version) {
                (Some(have), Some(want)) if have != want => {
                    return Err(BuildSpecError::ConflictingConstraint(rt.name));
                }
                (_, Some(want)) => existing.version_constraint = Some(want.clone()),
                (_, None) => {}
            },
            None => {
                let mut spec = PackageSpec::new(rt.name);
                spec.version_constraint = rt.version;
                specs.push(spec);
            }
        }
    }
    for s in &mut specs {
        s.set_variant_value("target", &machine.architecture);
    }
    EnvironmentManifest::new(specs, manifest.config.clone())
}
