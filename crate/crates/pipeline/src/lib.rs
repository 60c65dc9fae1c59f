//! Container image pipeline: machine-specialized build specifications, image
//! builders and the content-addressed image registry.

pub mod builder;
pub mod buildspec;
pub mod digest;
pub mod registry;
pub mod shell;

pub use builder::{
    build_image, host_platform, select_platform, BuildError, BuildLog, BuildMode, BuildPlatform, BuilderBackend,
    ExternalBackend, Payload, RawImage, SimulatedBackend,
};
pub use buildspec::{
    canonicalize, extend_environment, fetch_workflow_files, parse_container_config, parse_machine, parse_manifest,
    render_build_context, BuildContext, BuildSpecError, CanonicalSpec, ContainerConfig, EngineAllowList,
    EnvironmentManifest, ImageFormat, MachineDescription, PackageRecipe, PackageSpec,
};
pub use digest::Digest;
pub use registry::{image_id, Converter, FaultHooks, ImageRecord, Registry, RegistryError, SIF_MARKER};
