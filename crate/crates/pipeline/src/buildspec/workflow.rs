use std::collections::BTreeMap;
use std::fs;
use std::io::ErrorKind;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::machine::is_path_safe;
use super::manifest::{parse_manifest, EnvironmentManifest};
use super::BuildSpecError;
use crate::digest::Digest;

pub const MANIFEST_FILE: &str = "spack.yaml";
pub const RECIPE_FILE: &str = "package.py";
pub const PACKAGES_DIR: &str = "packages";

/// A per-package installation description, treated as opaque text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackageRecipe {
    pub name: String,
    pub body: String,
    /// Always `Digest::of(body)`.
    pub content_digest: Digest,
}

impl PackageRecipe {
    pub fn new(name: impl Into<String>, body: impl Into<String>) -> Self {
        let body = body.into();
        Self { name: name.into(), content_digest: Digest::of(body.as_bytes()), body }
    }

    pub fn verify(&self) -> bool {
        self.content_digest == Digest::of(self.body.as_bytes())
    }
}

/// Loads `<root>/<workflow>/<step_id>/spack.yaml` and every
/// `<root>/<workflow>/packages/<name>/package.py`.
pub fn fetch_workflow_files(
    workflow: &str,
    step_id: &str,
    registry_root: &Path,
) -> Result<(EnvironmentManifest, BTreeMap<String, PackageRecipe>), BuildSpecError> {
    if !is_path_safe(workflow) {
        return Err(BuildSpecError::WorkflowNotFound(workflow.into()));
    }
    let wf_dir = registry_root.join(workflow);
    if !wf_dir.is_dir() {
        return Err(BuildSpecError::WorkflowNotFound(workflow.into()));
    }
    if !is_path_safe(step_id) {
        return Err(BuildSpecError::StepNotFound(step_id.into()));
    }
    let manifest_path = wf_dir.join(step_id).join(MANIFEST_FILE);
    let text = match fs::read_to_string(&manifest_path) {
        Ok(t) => t,
        Err(e) if e.kind() == ErrorKind::NotFound => return Err(BuildSpecError::StepNotFound(step_id.into())),
        Err(e) => return Err(BuildSpecError::Io(format!("{}: {e}", manifest_path.display()))),
    };
    let manifest = parse_manifest(&text)?;

    let mut recipes = BTreeMap::new();
    let pkg_dir = wf_dir.join(PACKAGES_DIR);
    let entries = match fs::read_dir(&pkg_dir) {
        Ok(e) => e,
        Err(e) if e.kind() == ErrorKind::NotFound => return Ok((manifest, recipes)),
        Err(e) => return Err(BuildSpecError::Io(format!("{}: {e}", pkg_dir.display()))),
    };
    for entry in entries {
        let entry = entry.map_err(|e| BuildSpecError::Io(e.to_string()))?;
        let Ok(name) = entry.file_name().into_string() else {
            continue;
        };
        let path = entry.path().join(RECIPE_FILE);
        if !is_path_safe(&name) || !path.is_file() {
            continue;
        }
        let body = fs::read_to_string(&path).map_err(|e| BuildSpecError::Io(format!("{}: {e}", path.display())))?;
        recipes.insert(name.clone(), PackageRecipe::new(name, body));
    }
    Ok((manifest, recipes))
}
