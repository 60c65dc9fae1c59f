//! `build`, `status` and `download` against the service's HTTP API.

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;
use std::time::{Duration, Instant};

use hpcready_pipeline::digest::Hasher;
use hpcready_pipeline::parse_container_config;
use serde_json::Value;

use crate::exit::{code, CliError, CliResult};

#[derive(Debug, Clone)]
pub struct ClientConfig {
    pub service_url: String,
    pub poll_interval: Duration,
    pub timeout: Duration,
}

impl ClientConfig {
    pub fn new(service_url: &str, poll_interval: Duration, timeout: Duration) -> CliResult<Self> {
        if poll_interval.is_zero() {
            return Err(CliError::invalid("poll interval must be positive"));
        }
        if timeout < poll_interval {
            return Err(CliError::invalid("timeout must be at least the poll interval"));
        }
        let url = service_url.trim_end_matches('/');
        if !(url.starts_with("http://") || url.starts_with("https://")) {
            return Err(CliError::invalid(format!("service URL must start with http:// or https://, got {url:?}")));
        }
        Ok(Self { service_url: url.to_string(), poll_interval, timeout })
    }
}

pub struct Client {
    cfg: ClientConfig,
    agent: ureq::Agent,
}

struct Reply {
    status: u16,
    body: Value,
}

fn connection(e: ureq::Error) -> CliError {
    CliError::new(code::CONNECTION, format!("cannot reach the service: {e}"))
}

/// Maps an API error body to the matching exit code.
fn api_error(reply: &Reply) -> CliError {
    let msg = reply.body["error"].as_str().map(str::to_string).unwrap_or_else(|| reply.body.to_string());
    let code = match reply.status {
        400 => code::INVALID,
        404 => code::UNKNOWN_JOB,
        409 => code::NOT_READY,
        _ => code::FAILED,
    };
    CliError::new(code, msg)
}

impl Client {
    pub fn new(cfg: ClientConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_connect(Some(Duration::from_secs(5)))
            .build()
            .into();
        Self { cfg, agent }
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.cfg.service_url)
    }

    fn json(resp: &mut ureq::http::Response<ureq::Body>) -> CliResult<Reply> {
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(connection)?;
        let body = serde_json::from_str(&text).unwrap_or(Value::String(text));
        Ok(Reply { status, body })
    }

    pub fn submit(&self, config_json: &str) -> CliResult<String> {
        let mut resp = self
            .agent
            .post(self.url("/build"))
            .header("content-type", "application/json")
            .send(config_json)
            .map_err(connection)?;
        let reply = Self::json(&mut resp)?;
        if reply.status != 201 {
            return Err(api_error(&reply));
        }
        reply.body["job_id"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| CliError::failed(format!("malformed reply: {}", reply.body)))
    }

    pub fn status(&self, job_id: &str) -> CliResult<Value> {
        let mut resp = self.agent.get(self.url(&format!("/status/{job_id}"))).call().map_err(connection)?;
        let reply = Self::json(&mut resp)?;
        if reply.status != 200 {
            return Err(api_error(&reply));
        }
        Ok(reply.body)
    }

    /// Polls until the job is terminal or the timeout passes.
    pub fn wait(&self, job_id: &str) -> CliResult<Value> {
        let deadline = Instant::now() + self.cfg.timeout;
        loop {
            let view = self.status(job_id)?;
            if matches!(view["state"].as_str(), Some("FINISHED" | "FAILED")) {
                return Ok(view);
            }
            let now = Instant::now();
            if now >= deadline {
                return Err(CliError::new(
                    code::TIMEOUT,
                    format!(
                        "job {job_id} still {} after {:?}",
                        view["state"].as_str().unwrap_or("?"),
                        self.cfg.timeout
                    ),
                ));
            }
            std::thread::sleep(self.cfg.poll_interval.min(deadline - now));
        }
    }

    /// Streams the image to `out`, checking length and payload digest
    /// against the response headers. Returns `(bytes, sha256 hex)`.
    pub fn download(&self, job_id: &str, out: &Path) -> CliResult<(u64, String)> {
        let mut resp = self.agent.get(self.url(&format!("/download/{job_id}"))).call().map_err(connection)?;
        if resp.status().as_u16() != 200 {
            return Err(api_error(&Self::json(&mut resp)?));
        }
        let header = |name: &str| resp.headers().get(name).and_then(|v| v.to_str().ok()).map(str::to_string);
        let expected_len: Option<u64> = header("content-length").and_then(|v| v.parse().ok());
        let expected_digest = header("x-payload-digest");

        let mut file = fs::File::create(out).map_err(|e| CliError::write(format!("{}: {e}", out.display())))?;
        let result = copy_hashing(resp.into_body().into_reader(), &mut file);
        let fail = |e: CliError| {
            let _ = fs::remove_file(out);
            Err(e)
        };
        let (len, digest) = match result {
            Ok(v) => v,
            Err(e) => return fail(e),
        };
        if let Some(want) = expected_len {
            if want != len {
                return fail(CliError::new(code::CONNECTION, format!("incomplete download: {len} of {want} bytes")));
            }
        }
        if let Some(want) = expected_digest {
            if want != digest {
                return fail(CliError::new(code::CONNECTION, format!("payload digest {digest} does not match {want}")));
            }
        }
        Ok((len, digest))
    }
}

fn copy_hashing(mut from: impl Read, to: &mut fs::File) -> CliResult<(u64, String)> {
    let mut hasher = Hasher::new();
    let mut buf = vec![0u8; 64 * 1024];
    let mut total = 0u64;
    loop {
        let n = match from.read(&mut buf) {
            Ok(0) => break,
            Ok(n) => n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
            Err(e) => return Err(CliError::new(code::CONNECTION, format!("download interrupted: {e}"))),
        };
        to.write_all(&buf[..n]).map_err(CliError::write)?;
        hasher.update(&buf[..n]);
        total += n as u64;
    }
    to.sync_all().map_err(CliError::write)?;
    Ok((total, hasher.finish().to_hex()))
}

pub fn cmd_build(client: &Client, config_path: &Path, wait: bool) -> CliResult {
    let text = fs::read_to_string(config_path)
        .map_err(|e| CliError::invalid(format!("cannot read {}: {e}", config_path.display())))?;
    parse_container_config(&text).map_err(|e| CliError::invalid(format!("{}: {e}", config_path.display())))?;
    let job_id = client.submit(&text)?;
    println!("{job_id}");
    if !wait {
        return Ok(());
    }
    let view = client.wait(&job_id)?;
    match view["state"].as_str() {
        Some("FINISHED") => {
            println!("FINISHED {}", view["image_id"].as_str().unwrap_or_default());
            Ok(())
        }
        _ => {
            eprint!("{}", view["log_tail"].as_str().unwrap_or_default());
            println!("FAILED");
            Err(CliError::failed(format!("job {job_id} failed")))
        }
    }
}

pub fn cmd_status(client: &Client, job_id: &str) -> CliResult {
    let view = client.status(job_id)?;
    println!(
        "{job_id} {} reused={}",
        view["state"].as_str().unwrap_or("UNKNOWN"),
        view["reused"].as_bool().unwrap_or(false)
    );
    Ok(())
}

pub fn cmd_download(client: &Client, job_id: &str, out: &Path) -> CliResult {
    let (len, digest) = client.download(job_id, out)?;
    println!("{} {len} sha256:{digest}", out.display());
    Ok(())
}
