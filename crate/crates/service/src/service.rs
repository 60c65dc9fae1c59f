//! The build-job engine behind the HTTP API.
//!
//! A job runs: fetch workflow files → extend → canonicalize → reuse lookup
//! (hit: PENDING→FINISHED) → render context → build (BUILDING) → store →
//! convert (CONVERTING) → FINISHED. Jobs with the same canonical digest are
//! serialized, so a duplicate waits for the first build and then reuses it.
//! Jobs that need a build run in parallel up to `worker_cap`.

use std::collections::HashMap;
use std::fs;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use hpcready_pipeline::{
    build_image, fetch_workflow_files, host_platform, registry::RegistryError, render_build_context, select_platform,
    BuildError, BuildSpecError, BuilderBackend, ContainerConfig, Digest, EngineAllowList, ImageFormat, ImageRecord,
    Registry,
};
use tokio::sync::Semaphore;

use crate::config::ServiceConfig;
use crate::job::{BuildJob, JobState, JobView};

/// Bytes of job log included in a status view.
pub const LOG_TAIL_BYTES: usize = 64 * 1024;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ServiceError {
    #[error("validation failed: {0}")]
    ValidationFailed(String),
    #[error("unknown job: {0}")]
    UnknownJob(String),
    #[error("job {job_id} is {state}, not FINISHED")]
    NotReady { job_id: String, state: JobState },
    #[error("registry: {0}")]
    Registry(#[from] RegistryError),
    #[error("{0}")]
    Io(String),
}

#[derive(Clone)]
pub struct BuildService {
    inner: Arc<Inner>,
}

struct Inner {
    workflow_root: PathBuf,
    jobs_dir: PathBuf,
    host: String,
    engines: EngineAllowList,
    backend: Arc<dyn BuilderBackend>,
    registry: Registry,
    jobs: RwLock<HashMap<String, BuildJob>>,
    digest_locks: Mutex<HashMap<Digest, Arc<tokio::sync::Mutex<()>>>>,
    workers: Semaphore,
}

/// `Kind: message`, e.g. `WorkflowNotFound: workflow not found: x`.
fn describe(e: BuildSpecError) -> String {
    let debug = format!("{e:?}");
    let kind = debug.split(['(', ' ', '{']).next().unwrap_or_default();
    format!("{kind}: {e}")
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

impl BuildService {
    /// Opens the registry, recovers journaled jobs and builds the configured
    /// backend.
    pub fn new(cfg: &ServiceConfig) -> Result<Self, ServiceError> {
        Self::with_backend(cfg, cfg.make_backend())
    }

    pub fn with_backend(cfg: &ServiceConfig, backend: Arc<dyn BuilderBackend>) -> Result<Self, ServiceError> {
        cfg.validate().map_err(ServiceError::ValidationFailed)?;
        let mut registry = Registry::open(&cfg.registry_root)?.with_converter(cfg.converter());
        if let Some(q) = cfg.quota_bytes {
            registry = registry.with_quota(q);
        }
        let jobs_dir = cfg.registry_root.join("jobs");
        fs::create_dir_all(&jobs_dir).map_err(|e| ServiceError::Io(e.to_string()))?;
        let inner = Inner {
            workflow_root: cfg.workflow_root.clone(),
            host: cfg.host_platform.clone().unwrap_or_else(host_platform),
            engines: EngineAllowList::default(),
            backend,
            registry,
            jobs: RwLock::new(HashMap::new()),
            digest_locks: Mutex::new(HashMap::new()),
            workers: Semaphore::new(cfg.worker_cap),
            jobs_dir,
        };
        inner.recover()?;
        Ok(Self { inner: Arc::new(inner) })
    }

    pub fn registry(&self) -> &Registry {
        &self.inner.registry
    }

    /// Validates a ContainerConfig JSON document and starts a job.
    /// Must be called within a Tokio runtime.
    pub fn submit(&self, config_json: &str) -> Result<String, ServiceError> {
        let cfg = hpcready_pipeline::buildspec::parse_container_config_with(config_json, &self.inner.engines)
            .map_err(|e| ServiceError::ValidationFailed(e.to_string()))?;
        Ok(self.submit_config(cfg))
    }

    /// Starts a job for an already-validated configuration.
    pub fn submit_config(&self, config: ContainerConfig) -> String {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let job = BuildJob::new(id.clone(), config, now_ms());
        self.inner.journal(&job);
        self.inner.jobs.write().expect("jobs lock").insert(id.clone(), job);
        let inner = self.inner.clone();
        let job_id = id.clone();
        tokio::spawn(async move { inner.run(job_id).await });
        id
    }

    pub fn status(&self, job_id: &str) -> Result<JobView, ServiceError> {
        self.job(job_id).map(|j| j.view(LOG_TAIL_BYTES))
    }

    /// Full job record.
    pub fn job(&self, job_id: &str) -> Result<BuildJob, ServiceError> {
        self.inner
            .jobs
            .read()
            .expect("jobs lock")
            .get(job_id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownJob(job_id.into()))
    }

    /// The image of a FINISHED job and an open handle on its payload.
    pub fn download(&self, job_id: &str) -> Result<(ImageRecord, fs::File), ServiceError> {
        let job = self.job(job_id)?;
        match (job.state, job.image_id) {
            (JobState::Finished, Some(image_id)) => Ok(self.inner.registry.fetch_payload(&image_id)?),
            (state, _) => Err(ServiceError::NotReady { job_id: job_id.into(), state }),
        }
    }
}

impl Inner {
    fn journal_path(&self, id: &str) -> PathBuf {
        self.jobs_dir.join(format!("{id}.json"))
    }

    fn journal(&self, job: &BuildJob) {
        let write = || -> std::io::Result<()> {
            let mut tmp = tempfile::NamedTempFile::new_in(&self.jobs_dir)?;
            serde_json::to_writer(&mut tmp, job)?;
            tmp.persist(self.journal_path(&job.job_id)).map_err(|e| e.error)?;
            Ok(())
        };
        if let Err(e) = write() {
            tracing::warn!(job_id = %job.job_id, "cannot journal job: {e}");
        }
    }

    /// Loads journaled jobs; those that were in flight become FAILED.
    fn recover(&self) -> Result<(), ServiceError> {
        let entries = fs::read_dir(&self.jobs_dir).map_err(|e| ServiceError::Io(e.to_string()))?;
        let mut jobs = self.jobs.write().expect("jobs lock");
        for entry in entries.flatten() {
            let path = entry.path();
            if path.extension().and_then(|e| e.to_str()) != Some("json") {
                continue;
            }
            let Ok(mut job) = fs::read(&path)
                .map_err(|e| e.to_string())
                .and_then(|b| serde_json::from_slice::<BuildJob>(&b).map_err(|e| e.to_string()))
            else {
                tracing::warn!(path = %path.display(), "skipping unreadable job journal");
                continue;
            };
            if !job.state.is_terminal() {
                job.log.push_str("interrupted\n");
                job.advance(JobState::Failed, now_ms());
                self.journal(&job);
            }
            jobs.insert(job.job_id.clone(), job);
        }
        Ok(())
    }

    /// Applies `f` to the job and journals the result.
    fn update(&self, id: &str, f: impl FnOnce(&mut BuildJob)) {
        // Journaled under the lock so the file never regresses to an older state.
        let mut jobs = self.jobs.write().expect("jobs lock");
        let Some(job) = jobs.get_mut(id) else { return };
        f(job);
        self.journal(job);
    }

    fn log(&self, id: &str, line: impl AsRef<str>) {
        self.update(id, |j| {
            j.log.push_str(line.as_ref());
            if !line.as_ref().ends_with('\n') {
                j.log.push('\n');
            }
        });
    }

    fn advance(&self, id: &str, to: JobState) {
        self.update(id, |j| {
            let from = j.state;
            if !j.advance(to, now_ms()) {
                tracing::error!(job_id = id, %from, %to, "illegal transition suppressed");
            }
        });
    }

    fn fail(&self, id: &str, message: impl AsRef<str>) {
        self.log(id, message);
        self.advance(id, JobState::Failed);
        tracing::info!(job_id = id, "job failed");
    }

    fn finish(&self, id: &str, image_id: String, reused: bool) {
        self.update(id, |j| {
            j.image_id = Some(image_id);
            j.reused = reused;
            if !j.advance(JobState::Finished, now_ms()) {
                j.image_id = None;
            }
        });
        tracing::info!(job_id = id, reused, "job finished");
    }

    fn digest_lock(&self, d: Digest) -> Arc<tokio::sync::Mutex<()>> {
        self.digest_locks.lock().expect("digest lock table").entry(d).or_default().clone()
    }

    async fn run(self: Arc<Self>, id: String) {
        if let Err(msg) = self.clone().pipeline(&id).await {
            self.fail(&id, msg);
        }
    }

    async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, String> + Send + 'static) -> Result<T, String> {
        tokio::task::spawn_blocking(f).await.map_err(|e| format!("internal error: {e}"))?
    }

    async fn pipeline(self: Arc<Self>, id: &str) -> Result<(), String> {
        let config = self.jobs.read().expect("jobs lock").get(id).map(|j| j.config.clone()).ok_or("job vanished")?;
        let machine = config.machine.clone();
        let format = machine.image_format(&self.engines);

        let root = self.workflow_root.clone();
        let cfg = config.clone();
        let ctx = Self::blocking(move || {
            let (manifest, recipes) = fetch_workflow_files(&cfg.workflow, &cfg.step_id, &root).map_err(describe)?;
            render_build_context(&cfg, &manifest, &recipes, &cfg.machine).map_err(describe)
        })
        .await?;
        let digest = ctx.canonical.digest;
        self.update(id, |j| {
            j.canonical_digest = Some(digest);
            j.log.push_str(&format!("workflow {}/{}: canonical digest {digest}\n", config.workflow, config.step_id));
        });

        let lock = self.digest_lock(digest);
        let _serialized = lock.lock().await;
        if let Some(rec) = self.registry.reuse_lookup(&digest, format).map_err(|e| e.to_string())? {
            self.log(id, format!("reusing image {} ({format})", rec.image_id));
            self.finish(id, rec.image_id, true);
            return Ok(());
        }

        let _permit = self.workers.acquire().await.map_err(|e| e.to_string())?;
        self.advance(id, JobState::Building);
        let oci = match self.registry.reuse_lookup(&digest, ImageFormat::Oci).map_err(|e| e.to_string())? {
            Some(rec) => {
                self.log(id, format!("stored OCI image {} found; skipping build", rec.image_id));
                rec
            }
            None => {
                let platform = select_platform(&machine, &self.host);
                self.log(
                    id,
                    format!("building for {} on {} ({})", platform.target, platform.host, platform.mode.as_str()),
                );
                let this = self.clone();
                let (record, build_log) = Self::blocking(move || {
                    let raw = build_image(&ctx, &platform, this.backend.as_ref()).map_err(|e| match e {
                        BuildError::BuildFailed(log) => format!("{log}build failed"),
                        other => other.to_string(),
                    })?;
                    let rec = this.registry.store_image(&raw, &ctx.canonical, &machine).map_err(|e| e.to_string())?;
                    Ok((rec, raw.build_log))
                })
                .await?;
                self.log(id, build_log.to_string());
                self.log(id, format!("stored OCI image {} ({} bytes)", record.image_id, record.size_bytes));
                record
            }
        };

        self.advance(id, JobState::Converting);
        let image = if format == ImageFormat::Oci {
            self.log(id, "engine runs OCI images; no conversion");
            oci
        } else {
            let this = self.clone();
            let rec =
                Self::blocking(move || this.registry.convert_format(&oci, format).map_err(|e| e.to_string())).await?;
            self.log(id, format!("converted to {format}: image {}", rec.image_id));
            rec
        };
        self.finish(id, image.image_id, false);
        Ok(())
    }
}
