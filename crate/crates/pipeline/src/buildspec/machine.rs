//! Machine descriptions and the container-configuration JSON document.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::BuildSpecError;

/// Image formats the registry knows how to store.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ImageFormat {
    Oci,
    Sif,
}

impl ImageFormat {
    pub fn as_str(&self) -> &'static str {
        match self {
            ImageFormat::Oci => "OCI",
            ImageFormat::Sif => "SIF",
        }
    }
}

impl std::fmt::Display for ImageFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Container engines accepted in `container_engine`, and the image format each
/// one runs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineAllowList {
    engines: Vec<(String, ImageFormat)>,
}

impl Default for EngineAllowList {
    fn default() -> Self {
        Self {
            engines: vec![
                ("docker".into(), ImageFormat::Oci),
                ("podman".into(), ImageFormat::Oci),
                ("singularity".into(), ImageFormat::Sif),
                ("apptainer".into(), ImageFormat::Sif),
            ],
        }
    }
}

impl EngineAllowList {
    pub fn new(engines: impl IntoIterator<Item = (String, ImageFormat)>) -> Self {
        Self { engines: engines.into_iter().collect() }
    }

    pub fn format_for(&self, engine: &str) -> Option<ImageFormat> {
        self.engines.iter().find(|(e, _)| e == engine).map(|(_, f)| *f)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.engines.iter().map(|(e, _)| e.as_str())
    }
}

/// Target platform facts that drive image specialization.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MachineDescription {
    /// `<os>/<isa>`, e.g. `linux/amd64`.
    pub platform: String,
    /// Micro-architecture target, e.g. `skylake`.
    pub architecture: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub container_engine: Option<String>,
    /// `<name>[@<version>]`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mpi: Option<String>,
    /// `<name>[@<version>]`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gpu_runtime: Option<String>,
}

impl MachineDescription {
    /// Format of the image delivered to this machine: the engine's format, or
    /// OCI when no engine is named.
    pub fn image_format(&self, engines: &EngineAllowList) -> ImageFormat {
        self.container_engine.as_deref().and_then(|e| engines.format_for(e)).unwrap_or(ImageFormat::Oci)
    }

    /// Sorted `(key, value)` facts of the present fields.
    pub fn facts(&self) -> Vec<(&'static str, &str)> {
        let mut out = vec![("architecture", self.architecture.as_str()), ("platform", self.platform.as_str())];
        if let Some(v) = &self.container_engine {
            out.push(("container_engine", v));
        }
        if let Some(v) = &self.gpu_runtime {
            out.push(("gpu_runtime", v));
        }
        if let Some(v) = &self.mpi {
            out.push(("mpi", v));
        }
        out.sort();
        out
    }

    pub fn validate(&self, engines: &EngineAllowList) -> Result<(), BuildSpecError> {
        check_platform("platform", &self.platform)?;
        if !is_token(&self.architecture) {
            return Err(invalid("architecture", "must be a non-empty token of [A-Za-z0-9_.-]"));
        }
        if let Some(e) = &self.container_engine {
            if engines.format_for(e).is_none() {
                let allowed: Vec<_> = engines.names().collect();
                return Err(invalid("container_engine", &format!("'{e}' is not one of {}", allowed.join(", "))));
            }
        }
        for (field, v) in [("mpi", &self.mpi), ("gpu_runtime", &self.gpu_runtime)] {
            if let Some(v) = v {
                RuntimeSpec::parse(v).map_err(|reason| invalid(field, &reason))?;
            }
        }
        Ok(())
    }
}

/// A `<name>[@<version>]` runtime pin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuntimeSpec {
    pub name: String,
    pub version: Option<String>,
}

impl RuntimeSpec {
    pub fn parse(s: &str) -> Result<Self, String> {
        let (name, version) = match s.split_once('@') {
            Some((n, v)) => (n, Some(v)),
            None => (s, None),
        };
        if !is_package_name(name) {
            return Err(format!("'{s}' must look like <name>[@<version>]"));
        }
        if let Some(v) = version {
            if !is_version(v) {
                return Err(format!("'{s}' has an invalid version"));
            }
        }
        Ok(Self { name: name.to_string(), version: version.map(str::to_string) })
    }
}

/// The JSON document a client submits to request an image.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContainerConfig {
    pub machine: MachineDescription,
    pub workflow: String,
    pub step_id: String,
}

impl ContainerConfig {
    pub fn validate(&self, engines: &EngineAllowList) -> Result<(), BuildSpecError> {
        self.machine.validate(engines)?;
        for (field, v) in [("workflow", &self.workflow), ("step_id", &self.step_id)] {
            if !is_path_safe(v) {
                return Err(invalid(field, "must be a non-empty token without path separators or traversal"));
            }
        }
        Ok(())
    }
}

const MACHINE_FIELDS: &[&str] = &["platform", "architecture", "container_engine", "mpi", "gpu_runtime"];
const CONFIG_FIELDS: &[&str] = &["machine", "workflow", "step_id"];

/// Parses a machine-description object with the default engine allow-list.
pub fn parse_machine(json_text: &str) -> Result<MachineDescription, BuildSpecError> {
    parse_machine_with(json_text, &EngineAllowList::default())
}

pub fn parse_machine_with(json_text: &str, engines: &EngineAllowList) -> Result<MachineDescription, BuildSpecError> {
    let value: Value = serde_json::from_str(json_text).map_err(|e| BuildSpecError::MalformedJson(e.to_string()))?;
    let obj = as_object(&value, "machine")?;
    machine_from_object(obj, engines)
}

/// Parses a full container configuration (strict: unknown keys are rejected
/// at every level).
pub fn parse_container_config(json_text: &str) -> Result<ContainerConfig, BuildSpecError> {
    parse_container_config_with(json_text, &EngineAllowList::default())
}

pub fn parse_container_config_with(
    json_text: &str,
    engines: &EngineAllowList,
) -> Result<ContainerConfig, BuildSpecError> {
    let value: Value = serde_json::from_str(json_text).map_err(|e| BuildSpecError::MalformedJson(e.to_string()))?;
    config_from_value(&value, engines)
}

pub fn config_from_value(value: &Value, engines: &EngineAllowList) -> Result<ContainerConfig, BuildSpecError> {
    let obj = as_object(value, "config")?;
    reject_unknown(obj, CONFIG_FIELDS)?;
    let machine_value = obj.get("machine").ok_or_else(|| BuildSpecError::MissingField("machine".into()))?;
    let machine = machine_from_object(as_object(machine_value, "machine")?, engines)?;
    let cfg =
        ContainerConfig { machine, workflow: required_str(obj, "workflow")?, step_id: required_str(obj, "step_id")? };
    cfg.validate(engines)?;
    Ok(cfg)
}

fn machine_from_object(
    obj: &Map<String, Value>,
    engines: &EngineAllowList,
) -> Result<MachineDescription, BuildSpecError> {
    reject_unknown(obj, MACHINE_FIELDS)?;
    let m = MachineDescription {
        platform: required_str(obj, "platform")?,
        architecture: required_str(obj, "architecture")?,
        container_engine: optional_str(obj, "container_engine")?,
        mpi: optional_str(obj, "mpi")?,
        gpu_runtime: optional_str(obj, "gpu_runtime")?,
    };
    m.validate(engines)?;
    Ok(m)
}

fn as_object<'a>(v: &'a Value, what: &str) -> Result<&'a Map<String, Value>, BuildSpecError> {
    v.as_object().ok_or_else(|| invalid(what, "must be a JSON object"))
}

fn reject_unknown(obj: &Map<String, Value>, allowed: &[&str]) -> Result<(), BuildSpecError> {
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(invalid(k, "unknown field")),
        None => Ok(()),
    }
}

fn required_str(obj: &Map<String, Value>, key: &str) -> Result<String, BuildSpecError> {
    match obj.get(key) {
        None | Some(Value::Null) => Err(BuildSpecError::MissingField(key.into())),
        Some(Value::String(s)) => Ok(s.clone()),
        Some(_) => Err(invalid(key, "must be a string")),
    }
}

fn optional_str(obj: &Map<String, Value>, key: &str) -> Result<Option<String>, BuildSpecError> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(_) => Err(invalid(key, "must be a string")),
    }
}

fn invalid(field: &str, reason: &str) -> BuildSpecError {
    BuildSpecError::InvalidValue { field: field.into(), reason: reason.into() }
}

fn check_platform(field: &str, p: &str) -> Result<(), BuildSpecError> {
    let parts: Vec<&str> = p.split('/').collect();
    let ok = (2..=3).contains(&parts.len())
        && parts.iter().all(|s| !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-'));
    if ok {
        Ok(())
    } else {
        Err(invalid(field, &format!("'{p}' must look like <os>/<isa>")))
    }
}

pub(crate) fn is_token(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-'))
}

pub(crate) fn is_path_safe(s: &str) -> bool {
    is_token(s) && s != "." && s != ".." && !s.starts_with('.')
}

pub(crate) fn is_package_name(s: &str) -> bool {
    !s.is_empty()
        && s.chars().next().is_some_and(|c| c.is_ascii_alphanumeric())
        && s.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-'))
}

pub(crate) fn is_version(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-' | ':' | ','))
}
