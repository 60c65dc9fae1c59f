#![allow(dead_code)]

use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};
use std::time::Duration;

pub const BIN: &str = env!("CARGO_BIN_EXE_hpcready");
pub const SLOW_MS: u64 = 1500;

pub fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
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

/// The sample workflows plus `faulty/{ok,broken,slow}`.
pub fn workflow_tree(root: &Path) {
    copy_dir(&repo().join("workflows"), root);
    let wf = root.join("faulty");
    for (step, pkg) in [("ok", "alpha"), ("broken", "brokenpkg"), ("slow", "slowpkg")] {
        fs::create_dir_all(wf.join(step)).unwrap();
        fs::write(wf.join(step).join("spack.yaml"), format!("spack:\n  specs: [{pkg}]\n")).unwrap();
        fs::create_dir_all(wf.join("packages").join(pkg)).unwrap();
        fs::write(wf.join("packages").join(pkg).join("package.py"), format!("# {pkg}\n")).unwrap();
    }
}

/// A `hpcready serve` child process on an ephemeral port.
pub struct Service {
    pub url: String,
    pub dir: tempfile::TempDir,
    child: Child,
}

impl Service {
    pub fn start() -> Self {
        let dir = tempfile::tempdir().unwrap();
        workflow_tree(&dir.path().join("workflows"));
        let cfg = serde_json::json!({
            "listen": "127.0.0.1:0",
            "registry_root": "registry",
            "workflow_root": "workflows",
            "host_platform": "linux/amd64",
            "backend": {
                "kind": "simulated",
                "fail_packages": ["brokenpkg"],
                "delays_ms": { "slowpkg": SLOW_MS }
            }
        });
        let cfg_path = dir.path().join("service.json");
        fs::write(&cfg_path, cfg.to_string()).unwrap();
        let mut child = Command::new(BIN)
            .args(["serve", "--config"])
            .arg(&cfg_path)
            .env("RUST_LOG", "warn")
            .stdout(Stdio::null())
            .stderr(Stdio::piped())
            .spawn()
            .unwrap();
        let stderr = child.stderr.take().unwrap();
        let mut lines = BufReader::new(stderr).lines();
        let url = loop {
            let line = lines.next().expect("service exited before listening").unwrap();
            if let Some(rest) = line.split("listening on ").nth(1) {
                break rest.trim().to_string();
            }
        };
        // Keep draining so the child never blocks on a full pipe.
        std::thread::spawn(move || lines.for_each(drop));
        Self { url, dir, child }
    }

    pub fn registry(&self) -> PathBuf {
        self.dir.path().join("registry")
    }

    pub fn run(&self, args: &[&str]) -> Output {
        hpcready_with(args, Some(&self.url))
    }
}

impl Drop for Service {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

pub fn hpcready(args: &[&str]) -> Output {
    hpcready_with(args, None)
}

fn hpcready_with(args: &[&str], url: Option<&str>) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args).env_remove("HPCREADY_URL");
    if let Some(u) = url {
        cmd.env("HPCREADY_URL", u);
    }
    cmd.output().unwrap()
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn write_config(dir: &Path, name: &str, workflow: &str, step: &str, arch: &str, engine: &str) -> String {
    let path = dir.join(format!("{name}.json"));
    let body = format!(
        r#"{{"machine":{{"platform":"linux/amd64","architecture":"{arch}","container_engine":"{engine}"}},"workflow":"{workflow}","step_id":"{step}"}}"#
    );
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

pub fn sample_config(name: &str) -> String {
    repo().join("configs").join(format!("{name}.json")).to_str().unwrap().to_string()
}

pub fn poll_until(service: &Service, job: &str, state: &str) {
    let deadline = std::time::Instant::now() + Duration::from_secs(10);
    loop {
        let out = stdout(&service.run(&["status", job]));
        if out.contains(&format!(" {state} ")) {
            return;
        }
        assert!(std::time::Instant::now() < deadline, "{job} never reached {state}: {out}");
        std::thread::sleep(Duration::from_millis(20));
    }
}
