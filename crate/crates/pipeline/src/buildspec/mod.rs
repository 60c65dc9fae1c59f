//! Pipeline inputs: machine descriptions, environment manifests and package
//! recipes, plus the machine-extended build context rendered from them.
//!
//! Everything here is immutable after construction and free of I/O except
//! [`fetch_workflow_files`], which reads a local workflow tree.

mod canonical;
mod context;
mod extend;
mod machine;
mod manifest;
mod workflow;

pub use canonical::{canonicalize, CanonicalSpec};
pub use context::{render_build_context, BuildContext, DEFAULT_BASE_IMAGE};
pub use extend::extend_environment;
pub use machine::{
    config_from_value, parse_container_config, parse_container_config_with, parse_machine, parse_machine_with,
    ContainerConfig, EngineAllowList, ImageFormat, MachineDescription, RuntimeSpec,
};
pub use manifest::{parse_manifest, EnvironmentManifest, PackageSpec};
pub use workflow::{fetch_workflow_files, PackageRecipe};

/// Errors from parsing, validating, extending or rendering pipeline inputs.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BuildSpecError {
    #[error("malformed JSON: {0}")]
    MalformedJson(String),
    #[error("missing field '{0}'")]
    MissingField(String),
    #[error("invalid value for '{field}': {reason}")]
    InvalidValue { field: String, reason: String },
    #[error("malformed manifest: {0}")]
    MalformedManifest(String),
    #[error("duplicate package '{0}'")]
    DuplicatePackage(String),
    #[error("cyclic dependency: {}", .0.join(" -> "))]
    CyclicDependency(Vec<String>),
    #[error("conflicting constraint on '{0}'")]
    ConflictingConstraint(String),
    #[error("no recipe for package '{0}'")]
    MissingRecipe(String),
    #[error("workflow not found: {0}")]
    WorkflowNotFound(String),
    #[error("step not found: {0}")]
    StepNotFound(String),
    #[error("i/o error: {0}")]
    Io(String),
}
