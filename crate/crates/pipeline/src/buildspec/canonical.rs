use serde::{Deserialize, Serialize};

use super::machine::MachineDescription;
use super::manifest::{EnvironmentManifest, PackageSpec};
use crate::digest::Digest;

/// Order-independent normal form of an extended environment and the machine
/// it targets. Equal digests imply equal fields.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CanonicalSpec {
    /// Sorted by name; variants and dependencies sorted.
    pub extended_specs: Vec<PackageSpec>,
    /// Sorted by key.
    pub machine_facts: Vec<(String, String)>,
    pub digest: Digest,
}

impl CanonicalSpec {
    /// The hashed serialization: sorted, newline-terminated `key=value` lines.
    pub fn canonical_text(&self) -> String {
        canonical_text(&self.extended_specs, &self.machine_facts)
    }
}

fn canonical_text(specs: &[PackageSpec], facts: &[(String, String)]) -> String {
    let mut lines: Vec<String> = facts
        .iter()
        .map(|(k, v)| format!("machine.{k}={v}"))
        .chain(specs.iter().map(|s| format!("spec.{}={s}", s.name)))
        .collect();
    lines.sort();
    lines.iter().map(|l| format!("{l}\n")).collect()
}

/// Normalizes and hashes. Build options in `extended.config` are not part of
/// the digest.
pub fn canonicalize(extended: &EnvironmentManifest, machine: &MachineDescription) -> CanonicalSpec {
    let mut specs = extended.specs.clone();
    for s in &mut specs {
        s.dependencies.sort();
    }
    specs.sort_by(|a, b| a.name.cmp(&b.name));
    let facts: Vec<(String, String)> =
        machine.facts().into_iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    let digest = Digest::of(canonical_text(&specs, &facts).as_bytes());
    CanonicalSpec { extended_specs: specs, machine_facts: facts, digest }
}
