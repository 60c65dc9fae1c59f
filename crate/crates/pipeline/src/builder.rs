//! Turning a [`BuildContext`] into a raw OCI image through a pluggable backend.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Read;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::buildspec::{BuildContext, ImageFormat, MachineDescription};
use crate::digest::{Digest, Hasher};
use crate::shell;

/// Default cap on captured build output.
pub const DEFAULT_LOG_CAP: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BuildMode {
    Native,
    Emulated,
}

impl BuildMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            BuildMode::Native => "native",
            BuildMode::Emulated => "emulated",
        }
    }
}

/// Where an image is built. `mode == Native` iff `target == host`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BuildPlatform {
    pub target: String,
    pub host: String,
    pub mode: BuildMode,
}

pub fn select_platform(machine: &MachineDescription, host_platform: &str) -> BuildPlatform {
    let mode = if machine.platform == host_platform { BuildMode::Native } else { BuildMode::Emulated };
    BuildPlatform { target: machine.platform.clone(), host: host_platform.to_string(), mode }
}

/// `<os>/<isa>` of the running process, in container-platform spelling.
pub fn host_platform() -> String {
    let isa = match std::env::consts::ARCH {
        "x86_64" => "amd64",
        "aarch64" => "arm64",
        "powerpc64" => "ppc64le",
        "riscv64" => "riscv64",
        other => other,
    };
    format!("{}/{isa}", std::env::consts::OS)
}

/// Captured build output; the tail is kept when over the cap.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BuildLog {
    pub text: String,
    pub truncated: bool,
}

impl BuildLog {
    pub fn capture(text: String, cap: usize) -> Self {
        if text.len() <= cap {
            return Self { text, truncated: false };
        }
        let mut start = text.len() - cap;
        while !text.is_char_boundary(start) {
            start += 1;
        }
        Self { text: text[start..].to_string(), truncated: true }
    }
}

impl fmt::Display for BuildLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.truncated {
            f.write_str("[log truncated]\n")?;
        }
        f.write_str(&self.text)
    }
}

/// Image bytes, in memory or in a file kept alive by the payload.
#[derive(Debug, Clone)]
pub enum Payload {
    Memory(Arc<[u8]>),
    File { path: PathBuf, _keep: Option<Arc<tempfile::TempDir>> },
}

impl Payload {
    pub fn from_file(path: PathBuf) -> Self {
        Payload::File { path, _keep: None }
    }

    pub fn reader(&self) -> std::io::Result<Box<dyn Read + Send + '_>> {
        Ok(match self {
            Payload::Memory(b) => Box::new(&b[..]),
            Payload::File { path, .. } => Box::new(std::fs::File::open(path)?),
        })
    }

    pub fn to_vec(&self) -> std::io::Result<Vec<u8>> {
        let mut out = Vec::new();
        self.reader()?.read_to_end(&mut out)?;
        Ok(out)
    }

    pub fn digest(&self) -> std::io::Result<Digest> {
        let mut h = Hasher::new();
        std::io::copy(&mut self.reader()?, &mut h)?;
        Ok(h.finish())
    }
}

/// Backend output. `digest` is the hash of the payload bytes.
#[derive(Debug, Clone)]
pub struct RawImage {
    pub digest: Digest,
    pub format: ImageFormat,
    pub payload: Payload,
    pub build_log: BuildLog,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BuildError {
    #[error("unsupported platform: {0}")]
    UnsupportedPlatform(String),
    #[error("build failed:\n{0}")]
    BuildFailed(BuildLog),
}

/// An image-building engine.
pub trait BuilderBackend: Send + Sync {
    fn name(&self) -> &str;

    /// Target platforms this backend can produce.
    fn capabilities(&self) -> &BTreeSet<String>;

    /// Called only for targets within [`capabilities`](Self::capabilities).
    fn build(&self, ctx: &BuildContext, platform: &BuildPlatform) -> Result<RawImage, BuildError>;
}

/// Builds `ctx` for `platform`, refusing unsupported targets before any work.
pub fn build_image(
    ctx: &BuildContext,
    platform: &BuildPlatform,
    backend: &dyn BuilderBackend,
) -> Result<RawImage, BuildError> {
    if !backend.capabilities().contains(&platform.target) {
        return Err(BuildError::UnsupportedPlatform(platform.target.clone()));
    }
    backend.build(ctx, platform)
}

fn default_platforms() -> BTreeSet<String> {
    ["linux/amd64", "linux/arm64", "linux/ppc64le"].into_iter().map(String::from).collect()
}

/// Hermetic backend: the payload is a deterministic tar of the context files,
/// the platform and the list of "installed" packages.
#[derive(Debug)]
pub struct SimulatedBackend {
    platforms: BTreeSet<String>,
    fail_packages: BTreeSet<String>,
    delays: BTreeMap<String, Duration>,
    log_cap: usize,
    invocations: AtomicUsize,
}

impl Default for SimulatedBackend {
    fn default() -> Self {
        Self {
            platforms: default_platforms(),
            fail_packages: BTreeSet::new(),
            delays: BTreeMap::new(),
            log_cap: DEFAULT_LOG_CAP,
            invocations: AtomicUsize::new(0),
        }
    }
}

impl SimulatedBackend {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_platforms(mut self, platforms: impl IntoIterator<Item = impl Into<String>>) -> Self {
        self.platforms = platforms.into_iter().map(Into::into).collect();
        self
    }

    /// Installing `package` fails.
    pub fn failing(mut self, package: impl Into<String>) -> Self {
        self.fail_packages.insert(package.into());
        self
    }

    /// Installing `package` sleeps for `delay`.
    pub fn with_delay(mut self, package: impl Into<String>, delay: Duration) -> Self {
        self.delays.insert(package.into(), delay);
        self
    }

    pub fn with_log_cap(mut self, cap: usize) -> Self {
        self.log_cap = cap;
        self
    }

    /// Number of `build` calls so far.
    pub fn invocations(&self) -> usize {
        self.invocations.load(Ordering::SeqCst)
    }

    fn archive(ctx: &BuildContext, platform: &BuildPlatform, installed: &str) -> Vec<u8> {
        let platform_file =
            format!("target={}\nhost={}\nmode={}\n", platform.target, platform.host, platform.mode.as_str());
        let mut entries: Vec<(String, Vec<u8>)> = vec![
            ("hpcready/installed".into(), installed.as_bytes().to_vec()),
            ("hpcready/platform".into(), platform_file.into_bytes()),
            ("hpcready/canonical".into(), ctx.canonical.canonical_text().into_bytes()),
        ];
        entries.extend(ctx.files().into_iter().map(|(p, b)| (format!("context/{p}"), b)));
        entries.sort();
        let mut builder = tar::Builder::new(Vec::new());
        builder.mode(tar::HeaderMode::Deterministic);
        for (path, bytes) in entries {
            let mut header = tar::Header::new_ustar();
            header.set_size(bytes.len() as u64);
            header.set_mode(0o644);
            header.set_mtime(0);
            header.set_uid(0);
            header.set_gid(0);
            header.set_entry_type(tar::EntryType::Regular);
            builder.append_data(&mut header, path, bytes.as_slice()).expect("in-memory tar write");
        }
        builder.into_inner().expect("in-memory tar finish")
    }
}

impl BuilderBackend for SimulatedBackend {
    fn name(&self) -> &str {
        "simulated"
    }

    fn capabilities(&self) -> &BTreeSet<String> {
        &self.platforms
    }

    fn build(&self, ctx: &BuildContext, platform: &BuildPlatform) -> Result<RawImage, BuildError> {
        self.invocations.fetch_add(1, Ordering::SeqCst);
        let mut log = format!(
            "==> building {}/{} for {} ({})\n",
            ctx.workflow,
            ctx.step_id,
            platform.target,
            platform.mode.as_str()
        );
        let mut installed = String::new();
        for spec in &ctx.canonical.extended_specs {
            if let Some(d) = self.delays.get(&spec.name) {
                std::thread::sleep(*d);
            }
            if self.fail_packages.contains(&spec.name) {
                log.push_str(&format!("==> Error: installation of {} failed\n", spec.name));
                return Err(BuildError::BuildFailed(BuildLog::capture(log, self.log_cap)));
            }
            log.push_str(&format!("==> Installing {spec}\n"));
            installed.push_str(&format!("{spec}\n"));
        }
        let bytes = Self::archive(ctx, platform, &installed);
        log.push_str(&format!(
            "==> installed {} packages, image {} bytes\n",
            ctx.canonical.extended_specs.len(),
            bytes.len()
        ));
        Ok(RawImage {
            digest: Digest::of(&bytes),
            format: ImageFormat::Oci,
            payload: Payload::Memory(bytes.into()),
            build_log: BuildLog::capture(log, self.log_cap),
        })
    }
}

/// Shell-out backend. The template may reference `{context}` (directory with
/// the rendered files), `{platform}` and `{output}` (path the command must
/// write the OCI archive to). Exit status 0 means success.
#[derive(Debug, Clone)]
pub struct ExternalBackend {
    template: String,
    platforms: BTreeSet<String>,
    log_cap: usize,
}

impl ExternalBackend {
    pub fn new(template: impl Into<String>) -> Self {
        Self { template: template.into(), platforms: default_platforms(), log_cap: DEFAULT_LOG_CAP }
    }

    pub fn with_platforms(mut self, platforms: impl IntoIterator<Item = impl Into<String>>) -> Self {
        self.platforms = platforms.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_log_cap(mut self, cap: usize) -> Self {
        self.log_cap = cap;
        self
    }
}

impl BuilderBackend for ExternalBackend {
    fn name(&self) -> &str {
        "external"
    }

    fn capabilities(&self) -> &BTreeSet<String> {
        &self.platforms
    }

    fn build(&self, ctx: &BuildContext, platform: &BuildPlatform) -> Result<RawImage, BuildError> {
        let fail = |msg: String| BuildError::BuildFailed(BuildLog::capture(msg, self.log_cap));
        let work = tempfile::tempdir().map_err(|e| fail(format!("cannot create work directory: {e}")))?;
        let context_dir = work.path().join("context");
        let output = work.path().join("image.tar");
        ctx.write_to(&context_dir).map_err(|e| fail(format!("cannot write build context: {e}")))?;
        let command = shell::render_template(
            &self.template,
            &[
                ("context", &context_dir.to_string_lossy()),
                ("platform", &platform.target),
                ("output", &output.to_string_lossy()),
            ],
        );
        let (ok, text) = shell::run(&command).map_err(|e| fail(format!("cannot run '{command}': {e}")))?;
        if !ok {
            return Err(fail(text));
        }
        if !output.is_file() {
            return Err(fail(format!("{text}command succeeded but wrote no image to {}\n", output.display())));
        }
        let payload = Payload::File { path: output, _keep: Some(Arc::new(work)) };
        let digest = payload.digest().map_err(|e| fail(format!("{text}cannot read image: {e}\n")))?;
        Ok(RawImage { digest, format: ImageFormat::Oci, payload, build_log: BuildLog::capture(text, self.log_cap) })
    }
}
