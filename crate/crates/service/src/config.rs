use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use hpcready_pipeline::builder::DEFAULT_LOG_CAP;
use hpcready_pipeline::{BuilderBackend, Converter, ExternalBackend, SimulatedBackend};
use serde::{Deserialize, Serialize};

/// Service configuration, read from a JSON file.
///
/// ```json
/// {
///   "listen": "127.0.0.1:8080",
///   "registry_root": "/var/lib/hpcready",
///   "workflow_root": "/srv/workflows",
///   "worker_cap": 4,
///   "backend": { "kind": "simulated" }
/// }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceConfig {
    #[serde(default = "default_listen")]
    pub listen: String,
    pub registry_root: PathBuf,
    pub workflow_root: PathBuf,
    #[serde(default = "default_worker_cap")]
    pub worker_cap: usize,
    #[serde(default)]
    pub backend: BackendConfig,
    /// OCI→SIF command template with `{input}` and `{output}`; simulated
    /// conversion when absent.
    #[serde(default)]
    pub converter_command: Option<String>,
    /// Overrides the detected `<os>/<isa>` of this host.
    #[serde(default)]
    pub host_platform: Option<String>,
    #[serde(default = "default_log_cap")]
    pub log_cap_bytes: usize,
    #[serde(default)]
    pub quota_bytes: Option<u64>,
}

fn default_listen() -> String {
    "127.0.0.1:8080".into()
}

fn default_worker_cap() -> usize {
    4
}

fn default_log_cap() -> usize {
    DEFAULT_LOG_CAP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum BackendConfig {
    Simulated {
        #[serde(default)]
        fail_packages: Vec<String>,
        /// Per-package install delay in milliseconds.
        #[serde(default)]
        delays_ms: BTreeMap<String, u64>,
        #[serde(default)]
        platforms: Option<Vec<String>>,
    },
    External {
        /// Uses `{context}`, `{platform}` and `{output}`.
        command: String,
        #[serde(default)]
        platforms: Option<Vec<String>>,
    },
}

impl Default for BackendConfig {
    fn default() -> Self {
        BackendConfig::Simulated { fail_packages: Vec::new(), delays_ms: BTreeMap::new(), platforms: None }
    }
}

impl ServiceConfig {
    pub fn new(registry_root: impl Into<PathBuf>, workflow_root: impl Into<PathBuf>) -> Self {
        Self {
            listen: default_listen(),
            registry_root: registry_root.into(),
            workflow_root: workflow_root.into(),
            worker_cap: default_worker_cap(),
            backend: BackendConfig::default(),
            converter_command: None,
            host_platform: None,
            log_cap_bytes: default_log_cap(),
            quota_bytes: None,
        }
    }

    /// Reads a JSON file; relative roots resolve against the file's directory.
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut cfg: Self = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for root in [&mut cfg.registry_root, &mut cfg.workflow_root] {
            if root.is_relative() {
                *root = base.join(&*root);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.worker_cap == 0 {
            return Err("worker_cap must be at least 1".into());
        }
        if self.log_cap_bytes == 0 {
            return Err("log_cap_bytes must be positive".into());
        }
        Ok(())
    }

    pub fn make_backend(&self) -> Arc<dyn BuilderBackend> {
        match &self.backend {
            BackendConfig::Simulated { fail_packages, delays_ms, platforms } => {
                let mut b = SimulatedBackend::new().with_log_cap(self.log_cap_bytes);
                if let Some(p) = platforms {
                    b = b.with_platforms(p.iter().cloned());
                }
                for p in fail_packages {
                    b = b.failing(p.clone());
                }
                for (p, ms) in delays_ms {
                    b = b.with_delay(p.clone(), Duration::from_millis(*ms));
                }
                Arc::new(b)
            }
            BackendConfig::External { command, platforms } => {
                let mut b = ExternalBackend::new(command.clone()).with_log_cap(self.log_cap_bytes);
                if let Some(p) = platforms {
                    b = b.with_platforms(p.iter().cloned());
                }
                Arc::new(b)
            }
        }
    }

    pub fn converter(&self) -> Converter {
        match &self.converter_command {
            Some(cmd) => Converter::External(cmd.clone()),
            None => Converter::Simulated,
        }
    }
}
