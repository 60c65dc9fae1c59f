#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use hpcready_pipeline::SimulatedBackend;
use hpcready_service::{BuildService, JobState, JobView, ServiceConfig};

pub const SLOW: Duration = Duration::from_millis(300);

pub fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

/// The sample workflows plus a `faulty` workflow whose steps pass (`ok`),
/// fail (`broken`) or build slowly (`slow`).
pub fn workflow_tree() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    copy_dir(&repo().join("workflows"), dir.path());
    let wf = dir.path().join("faulty");
    for (step, pkg) in [("ok", "alpha"), ("broken", "brokenpkg"), ("slow", "slowpkg")] {
        fs::create_dir_all(wf.join(step)).unwrap();
        fs::write(wf.join(step).join("spack.yaml"), format!("spack:\n  specs: [{pkg}]\n")).unwrap();
        fs::create_dir_all(wf.join("packages").join(pkg)).unwrap();
        fs::write(wf.join("packages").join(pkg).join("package.py"), format!("# {pkg}\n")).unwrap();
    }
    dir
}

fn copy_dir(from: &Path, to: &Path) {
    fs::create_dir_all(to).unwrap();
    for e in fs::read_dir(from).unwrap() {
        let e = e.unwrap();
        let target = to.join(e.file_name());
        if e.file_type().unwrap().is_dir() {
            copy_dir(&e.path(), &target);
        } else {
            fs::copy(e.path(), target).unwrap();
        }
    }
}

pub fn backend() -> Arc<SimulatedBackend> {
    Arc::new(SimulatedBackend::new().failing("brokenpkg").with_delay("slowpkg", SLOW))
}

pub struct Fixture {
    pub workflows: tempfile::TempDir,
    pub registry: tempfile::TempDir,
    pub backend: Arc<SimulatedBackend>,
    pub service: BuildService,
}

pub fn fixture() -> Fixture {
    let workflows = workflow_tree();
    let registry = tempfile::tempdir().unwrap();
    let backend = backend();
    let mut cfg = ServiceConfig::new(registry.path(), workflows.path());
    cfg.host_platform = Some("linux/amd64".into());
    let service = BuildService::with_backend(&cfg, backend.clone()).unwrap();
    Fixture { workflows, registry, backend, service }
}

pub fn config_json(workflow: &str, step: &str, arch: &str, engine: Option<&str>) -> String {
    let engine = engine.map(|e| format!(r#","container_engine":"{e}""#)).unwrap_or_default();
    format!(
        r#"{{"machine":{{"platform":"linux/amd64","architecture":"{arch}"{engine}}},"workflow":"{workflow}","step_id":"{step}"}}"#
    )
}

pub fn sample_config(name: &str) -> String {
    fs::read_to_string(repo().join("configs").join(format!("{name}.json"))).unwrap()
}

/// Polls until the job is terminal.
pub async fn wait(service: &BuildService, id: &str) -> JobView {
    let deadline = Instant::now() + Duration::from_secs(30);
    loop {
        let v = service.status(id).unwrap();
        if v.state.is_terminal() {
            return v;
        }
        assert!(Instant::now() < deadline, "job {id} stuck in {}", v.state);
        tokio::time::sleep(Duration::from_millis(5)).await;
    }
}

pub fn states(v: &JobView) -> Vec<JobState> {
    v.history.iter().map(|t| t.state).collect()
}
