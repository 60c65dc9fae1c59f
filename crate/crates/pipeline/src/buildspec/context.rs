use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::canonical::{canonicalize, CanonicalSpec};
use super::extend::extend_environment;
use super::machine::{ContainerConfig, MachineDescription};
use super::manifest::EnvironmentManifest;
use super::workflow::PackageRecipe;
use super::BuildSpecError;

/// Base image carrying the package builder.
pub const DEFAULT_BASE_IMAGE: &str = "spack/ubuntu-jammy:0.21";

const ENV_DIR: &str = "/opt/hpcready/env";
const REPO_DIR: &str = "/opt/hpcready/repo";

/// Everything an image builder needs, rendered deterministically.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildContext {
    /// Dockerfile.
    pub recipe_file: String,
    /// Extended manifest in YAML.
    pub environment_file: String,
    /// One entry per package referenced by the extended manifest.
    pub package_files: BTreeMap<String, PackageRecipe>,
    pub canonical: CanonicalSpec,
    pub extended: EnvironmentManifest,
    pub workflow: String,
    pub step_id: String,
}

impl BuildContext {
    /// Context files as `(relative path, bytes)`, sorted by path.
    pub fn files(&self) -> Vec<(String, Vec<u8>)> {
        let mut out = vec![
            ("Dockerfile".to_string(), self.recipe_file.clone().into_bytes()),
            ("repo/repo.yaml".to_string(), repo_yaml(&self.workflow).into_bytes()),
            ("spack.yaml".to_string(), self.environment_file.clone().into_bytes()),
        ];
        for (name, r) in &self.package_files {
            out.push((format!("repo/packages/{name}/package.py"), r.body.clone().into_bytes()));
        }
        out.sort();
        out
    }

    /// Materializes [`files`](Self::files) under `dir`.
    pub fn write_to(&self, dir: &Path) -> std::io::Result<()> {
        for (rel, bytes) in self.files() {
            let path = dir.join(rel);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent)?;
            }
            fs::write(path, bytes)?;
        }
        Ok(())
    }
}

fn repo_yaml(workflow: &str) -> String {
    let ns: String = workflow.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect();
    format!("repo:\n  namespace: \"hpcready_{ns}\"\n")
}

/// Extends `manifest` for `machine`, canonicalizes it and renders the build
/// recipe, environment file and package files.
pub fn render_build_context(
    config: &ContainerConfig,
    manifest: &EnvironmentManifest,
    recipes: &BTreeMap<String, PackageRecipe>,
    machine: &MachineDescription,
) -> Result<BuildContext, BuildSpecError> {
    let extended = extend_environment(manifest, machine)?;
    let canonical = canonicalize(&extended, machine);
    let mut package_files = BTreeMap::new();
    for name in extended.referenced_packages() {
        let recipe = recipes.get(name).ok_or_else(|| BuildSpecError::MissingRecipe(name.into()))?;
        package_files.insert(name.to_string(), recipe.clone());
    }
    let recipe_file = format!(
        "# workflow {wf}, step {step}\n\
         FROM --platform={platform} {base}\n\
         LABEL org.hpcready.canonical-digest=\"{digest}\" org.hpcready.architecture=\"{arch}\"\n\
         COPY spack.yaml {ENV_DIR}/spack.yaml\n\
         COPY repo {REPO_DIR}\n\
         RUN spack repo add {REPO_DIR} && spack -e {ENV_DIR} concretize -f && spack -e {ENV_DIR} install --fail-fast\n",
        wf = config.workflow,
        step = config.step_id,
        platform = machine.platform,
        base = DEFAULT_BASE_IMAGE,
        digest = canonical.digest,
        arch = machine.architecture,
    );
    Ok(BuildContext {
        recipe_file,
        environment_file: extended.to_yaml(),
        package_files,
        canonical,
        extended,
        workflow: config.workflow.clone(),
        step_id: config.step_id.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::buildspec::parse_manifest;

    fn fixture() -> (ContainerConfig, EnvironmentManifest, BTreeMap<String, PackageRecipe>) {
        let machine = MachineDescription {
            platform: "linux/arm64".into(),
            architecture: "neoverse_v1".into(),
            container_engine: None,
            mpi: Some("openmpi@4".into()),
            gpu_runtime: None,
        };
        let cfg = ContainerConfig { machine, workflow: "demo".into(), step_id: "run".into() };
        let m = parse_manifest("spack:\n  specs: [tool ^zlib]\n").unwrap();
        let recipes = ["tool", "zlib", "openmpi", "unused"]
            .into_iter()
            .map(|n| (n.to_string(), PackageRecipe::new(n, format!("# {n}\n"))))
            .collect();
        (cfg, m, recipes)
    }

    #[test]
    fn renders_expected_files() {
        let (cfg, m, r) = fixture();
        let ctx = render_build_context(&cfg, &m, &r, &cfg.machine).unwrap();
        assert!(ctx.recipe_file.contains("FROM --platform=linux/arm64 "));
        assert!(ctx.recipe_file.contains("COPY spack.yaml"));
        assert!(ctx.recipe_file.contains("install"));
        assert_eq!(ctx.package_files.keys().collect::<Vec<_>>(), ["openmpi", "tool", "zlib"]);
        assert_eq!(parse_manifest(&ctx.environment_file).unwrap(), ctx.extended);
        let paths: Vec<String> = ctx.files().into_iter().map(|(p, _)| p).collect();
        assert!(paths.contains(&"repo/packages/zlib/package.py".to_string()));
    }

    #[test]
    fn missing_recipe() {
        let (cfg, m, mut r) = fixture();
        r.remove("zlib");
        assert_eq!(render_build_context(&cfg, &m, &r, &cfg.machine), Err(BuildSpecError::MissingRecipe("zlib".into())));
    }

    #[test]
    fn deterministic() {
        let (cfg, m, r) = fixture();
        assert_eq!(
            render_build_context(&cfg, &m, &r, &cfg.machine).unwrap(),
            render_build_context(&cfg, &m, &r, &cfg.machine).unwrap()
        );
    }
}
