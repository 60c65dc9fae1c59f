//! Directory-tree image store with reuse lookup and OCI→SIF conversion.
//!
//! Layout: `<root>/payloads/<payload_digest>` holds image bytes and
//! `<root>/meta/<image_id>.json` one [`ImageRecord`] each. Both are written to
//! `<root>/tmp` first and renamed into place, payload before metadata, so a
//! record is visible only once its payload is complete.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{self, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::builder::{BuildLog, Payload, RawImage, DEFAULT_LOG_CAP};
use crate::buildspec::{CanonicalSpec, ImageFormat, MachineDescription};
use crate::digest::{Digest, Hasher};
use crate::shell;

/// First bytes of a simulated SIF image; the OCI archive follows.
pub const SIF_MARKER: &[u8; 8] = b"HPCSIF00";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub image_id: String,
    pub canonical_digest: Digest,
    pub machine: MachineDescription,
    pub format: ImageFormat,
    pub payload_digest: Digest,
    pub size_bytes: u64,
    /// Milliseconds since the Unix epoch.
    pub created_at: u64,
}

/// Deterministic id for a `(canonical_digest, format)` pair.
pub fn image_id(canonical_digest: &Digest, format: ImageFormat) -> String {
    let key = format!("{canonical_digest}:{format}");
    Digest::of(key.as_bytes()).to_hex()[..32].to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RegistryError {
    #[error("image not found: {0}")]
    NotFound(String),
    #[error("storage full: need {needed} bytes, {available} available")]
    StorageFull { needed: u64, available: u64 },
    #[error("corrupt payload: expected {expected}, stored bytes hash to {actual}")]
    CorruptPayload { expected: Digest, actual: Digest },
    #[error("unsupported conversion {from} -> {to}")]
    UnsupportedConversion { from: ImageFormat, to: ImageFormat },
    #[error("conversion failed:\n{0}")]
    ConversionFailed(String),
    #[error("injected crash after payload write")]
    InjectedCrash,
    #[error("registry i/o error: {0}")]
    Io(String),
}

impl From<io::Error> for RegistryError {
    fn from(e: io::Error) -> Self {
        RegistryError::Io(e.to_string())
    }
}

/// How OCI images become SIF images.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum Converter {
    /// Prefix the OCI bytes with [`SIF_MARKER`].
    #[default]
    Simulated,
    /// Shell command with `{input}` and `{output}` placeholders.
    External(String),
}

/// Failure-injection switches for tests.
#[derive(Debug, Clone, Copy, Default)]
pub struct FaultHooks {
    /// Stop after the payload rename, before metadata is written.
    pub crash_after_payload_write: bool,
    /// Flip a byte of the staged payload before write-back verification.
    pub tamper_payload: bool,
}

#[derive(Debug)]
pub struct Registry {
    root: PathBuf,
    quota: Option<u64>,
    converter: Converter,
    faults: Mutex<FaultHooks>,
    locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

impl Registry {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, RegistryError> {
        let root = root.into();
        for sub in ["payloads", "meta", "tmp"] {
            fs::create_dir_all(root.join(sub))?;
        }
        Ok(Self {
            root,
            quota: None,
            converter: Converter::Simulated,
            faults: Mutex::new(FaultHooks::default()),
            locks: Mutex::new(HashMap::new()),
        })
    }

    /// Caps the total size of stored payloads.
    pub fn with_quota(mut self, bytes: u64) -> Self {
        self.quota = Some(bytes);
        self
    }

    pub fn with_converter(mut self, converter: Converter) -> Self {
        self.converter = converter;
        self
    }

    pub fn set_faults(&self, faults: FaultHooks) {
        *self.faults.lock().expect("fault lock") = faults;
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn meta_path(&self, id: &str) -> PathBuf {
        self.root.join("meta").join(format!("{id}.json"))
    }

    pub fn payload_path(&self, payload_digest: &Digest) -> PathBuf {
        self.root.join("payloads").join(payload_digest.to_hex())
    }

    fn lock_for(&self, id: &str) -> Arc<Mutex<()>> {
        self.locks.lock().expect("lock table").entry(id.to_string()).or_default().clone()
    }

    /// The record for `image_id`, if stored.
    pub fn record(&self, id: &str) -> Result<ImageRecord, RegistryError> {
        let text = match fs::read(self.meta_path(id)) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Err(RegistryError::NotFound(id.into())),
            Err(e) => return Err(e.into()),
        };
        serde_json::from_slice(&text).map_err(|e| RegistryError::Io(format!("meta {id}: {e}")))
    }

    /// The record stored for exactly this digest and format.
    pub fn reuse_lookup(
        &self,
        canonical_digest: &Digest,
        format: ImageFormat,
    ) -> Result<Option<ImageRecord>, RegistryError> {
        match self.record(&image_id(canonical_digest, format)) {
            Ok(r) if r.canonical_digest == *canonical_digest && r.format == format => Ok(Some(r)),
            Ok(_) | Err(RegistryError::NotFound(_)) => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// All records, sorted by id.
    pub fn records(&self) -> Result<Vec<ImageRecord>, RegistryError> {
        let mut ids: Vec<String> = fs::read_dir(self.root.join("meta"))?
            .filter_map(|e| e.ok()?.file_name().into_string().ok()?.strip_suffix(".json").map(str::to_string))
            .collect();
        ids.sort();
        ids.iter().map(|id| self.record(id)).collect()
    }

    /// Persists `raw` and its record. Returns the existing record when this
    /// `(canonical digest, format)` is already stored.
    pub fn store_image(
        &self,
        raw: &RawImage,
        canonical: &CanonicalSpec,
        machine: &MachineDescription,
    ) -> Result<ImageRecord, RegistryError> {
        self.store_payload(&raw.payload, raw.digest, raw.format, canonical.digest, machine)
    }

    fn store_payload(
        &self,
        payload: &Payload,
        expected: Digest,
        format: ImageFormat,
        canonical_digest: Digest,
        machine: &MachineDescription,
    ) -> Result<ImageRecord, RegistryError> {
        let id = image_id(&canonical_digest, format);
        let lock = self.lock_for(&id);
        let _guard = lock.lock().expect("per-digest lock");
        if let Some(existing) = self.reuse_lookup(&canonical_digest, format)? {
            return Ok(existing);
        }
        let faults = *self.faults.lock().expect("fault lock");

        let mut staged = tempfile::NamedTempFile::new_in(self.root.join("tmp"))?;
        let mut reader = payload.reader()?;
        let mut hasher = Hasher::new();
        let mut size = 0u64;
        let mut buf = vec![0u8; 64 * 1024];
        loop {
            let n = reader.read(&mut buf)?;
            if n == 0 {
                break;
            }
            hasher.update(&buf[..n]);
            staged.write_all(&buf[..n])?;
            size += n as u64;
        }
        let streamed = hasher.finish();
        if streamed != expected {
            return Err(RegistryError::CorruptPayload { expected, actual: streamed });
        }
        if let Some(quota) = self.quota {
            let used = self.used_bytes()?;
            let available = quota.saturating_sub(used);
            if size > available {
                return Err(RegistryError::StorageFull { needed: size, available });
            }
        }
        staged.flush()?;
        if faults.tamper_payload && size > 0 {
            let f = staged.as_file_mut();
            use std::io::{Seek, SeekFrom};
            f.seek(SeekFrom::Start(0))?;
            let mut first = [0u8; 1];
            f.read_exact(&mut first)?;
            f.seek(SeekFrom::Start(0))?;
            f.write_all(&[first[0] ^ 0xff])?;
            f.flush()?;
        }
        let written = hash_file(staged.path())?;
        if written != expected {
            return Err(RegistryError::CorruptPayload { expected, actual: written });
        }
        staged.as_file().sync_all()?;
        staged.persist(self.payload_path(&expected)).map_err(|e| RegistryError::Io(e.to_string()))?;
        if faults.crash_after_payload_write {
            return Err(RegistryError::InjectedCrash);
        }

        let record = ImageRecord {
            image_id: id.clone(),
            canonical_digest,
            machine: machine.clone(),
            format,
            payload_digest: expected,
            size_bytes: size,
            created_at: now_ms(),
        };
        let mut meta = tempfile::NamedTempFile::new_in(self.root.join("tmp"))?;
        serde_json::to_writer_pretty(&mut meta, &record).map_err(|e| RegistryError::Io(e.to_string()))?;
        meta.as_file().sync_all()?;
        meta.persist(self.meta_path(&id)).map_err(|e| RegistryError::Io(e.to_string()))?;
        tracing::debug!(image_id = %id, %format, size, "stored image");
        Ok(record)
    }

    fn used_bytes(&self) -> Result<u64, RegistryError> {
        let mut total = 0;
        for e in fs::read_dir(self.root.join("payloads"))? {
            total += e?.metadata()?.len();
        }
        Ok(total)
    }

    /// Opens the stored bytes of `image_id`.
    pub fn fetch_payload(&self, id: &str) -> Result<(ImageRecord, File), RegistryError> {
        let record = self.record(id)?;
        let file = File::open(self.payload_path(&record.payload_digest)).map_err(|e| match e.kind() {
            io::ErrorKind::NotFound => RegistryError::NotFound(id.into()),
            _ => e.into(),
        })?;
        Ok((record, file))
    }

    pub fn fetch_payload_bytes(&self, id: &str) -> Result<Vec<u8>, RegistryError> {
        let (_, mut f) = self.fetch_payload(id)?;
        let mut out = Vec::new();
        f.read_to_end(&mut out)?;
        Ok(out)
    }

    /// Converts an OCI record to SIF, keeping the original. Returns the
    /// existing SIF record if one is stored.
    pub fn convert_format(&self, record: &ImageRecord, target: ImageFormat) -> Result<ImageRecord, RegistryError> {
        if record.format != ImageFormat::Oci || target != ImageFormat::Sif {
            return Err(RegistryError::UnsupportedConversion { from: record.format, to: target });
        }
        if let Some(existing) = self.reuse_lookup(&record.canonical_digest, target)? {
            return Ok(existing);
        }
        let source = self.payload_path(&record.payload_digest);
        let converted = match &self.converter {
            Converter::Simulated => {
                let mut bytes = SIF_MARKER.to_vec();
                File::open(&source)?.read_to_end(&mut bytes)?;
                Payload::Memory(bytes.into())
            }
            Converter::External(template) => {
                let work = tempfile::tempdir()?;
                let output = work.path().join("image.sif");
                let cmd = shell::render_template(
                    template,
                    &[("input", &source.to_string_lossy()), ("output", &output.to_string_lossy())],
                );
                let (ok, log) = shell::run(&cmd)?;
                let log = BuildLog::capture(log, DEFAULT_LOG_CAP).to_string();
                if !ok || !output.is_file() {
                    return Err(RegistryError::ConversionFailed(log));
                }
                Payload::File { path: output, _keep: Some(Arc::new(work)) }
            }
        };
        let digest = converted.digest()?;
        self.store_payload(&converted, digest, target, record.canonical_digest, &record.machine)
    }
}

fn hash_file(path: &Path) -> io::Result<Digest> {
    let mut h = Hasher::new();
    io::copy(&mut BufReader::new(File::open(path)?), &mut h)?;
    Ok(h.finish())
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::buildspec::{canonicalize, parse_manifest};

    fn machine(arch: &str) -> MachineDescription {
        MachineDescription {
            platform: "linux/amd64".into(),
            architecture: arch.into(),
            container_engine: None,
            mpi: None,
            gpu_runtime: None,
        }
    }

    fn canonical(arch: &str) -> CanonicalSpec {
        canonicalize(&parse_manifest("spack:\n  specs: [exageostat]\n").unwrap(), &machine(arch))
    }

    fn raw(bytes: &[u8]) -> RawImage {
        RawImage {
            digest: Digest::of(bytes),
            format: ImageFormat::Oci,
            payload: Payload::Memory(bytes.into()),
            build_log: BuildLog::default(),
        }
    }

    #[test]
    fn store_lookup_fetch() {
        let dir = tempfile::tempdir().unwrap();
        let reg = Registry::open(dir.path()).unwrap();
        let c = canonical("skylake");
        assert_eq!(reg.reuse_lookup(&c.digest, ImageFormat::Oci).unwrap(), None);
        let r = reg.store_image(&raw(b"image bytes"), &c, &machine("skylake")).unwrap();
        assert_eq!(r.format, ImageFormat::Oci);
        assert_eq!(r.size_bytes, 11);
        assert_eq!(reg.reuse_lookup(&c.digest, ImageFormat::Oci).unwrap(), Some(r.clone()));
        assert_eq!(reg.reuse_lookup(&c.digest, ImageFormat::Sif).unwrap(), None);
        assert_eq!(reg.fetch_payload_bytes(&r.image_id).unwrap(), b"image bytes");
        let again = reg.store_image(&raw(b"image bytes"), &c, &machine("skylake")).unwrap();
        assert_eq!(again, r);
        assert!(matches!(reg.fetch_payload_bytes("nope"), Err(RegistryError::NotFound(_))));
    }

    #[test]
    fn distinct_architectures_distinct_records() {
        let dir = tempfile::tempdir().unwrap();
        let reg = Registry::open(dir.path()).unwrap();
        let (a, b) = (canonical("skylake"), canonical("zen3"));
        assert_ne!(a.digest, b.digest);
        let ra = reg.store_image(&raw(b"a"), &a, &machine("skylake")).unwrap();
        let rb = reg.store_image(&raw(b"b"), &b, &machine("zen3")).unwrap();
        assert_ne!(ra.image_id, rb.image_id);
        assert_eq!(reg.reuse_lookup(&b.digest, ImageFormat::Oci).unwrap().unwrap().machine.architecture, "zen3");
    }

    #[test]
    fn conversion() {
        let dir = tempfile::tempdir().unwrap();
        let reg = Registry::open(dir.path()).unwrap();
        let c = canonical("skylake");
        let oci = reg.store_image(&raw(b"oci"), &c, &machine("skylake")).unwrap();
        let sif = reg.convert_format(&oci, ImageFormat::Sif).unwrap();
        assert_eq!(sif.format, ImageFormat::Sif);
        assert_eq!(sif.canonical_digest, oci.canonical_digest);
        assert_eq!(reg.fetch_payload_bytes(&sif.image_id).unwrap(), b"HPCSIF00oci");
        assert_eq!(reg.reuse_lookup(&c.digest, ImageFormat::Sif).unwrap(), Some(sif.clone()));
        assert_eq!(reg.fetch_payload_bytes(&oci.image_id).unwrap(), b"oci");
        assert_eq!(
            reg.convert_format(&sif, ImageFormat::Sif),
            Err(RegistryError::UnsupportedConversion { from: ImageFormat::Sif, to: ImageFormat::Sif })
        );
    }

    #[test]
    fn external_converter() {
        let dir = tempfile::tempdir().unwrap();
        let reg = Registry::open(dir.path()).unwrap().with_converter(Converter::External("cp {input} {output}".into()));
        let c = canonical("skylake");
        let oci = reg.store_image(&raw(b"oci"), &c, &machine("skylake")).unwrap();
        let sif = reg.convert_format(&oci, ImageFormat::Sif).unwrap();
        assert_eq!(reg.fetch_payload_bytes(&sif.image_id).unwrap(), b"oci");

        let dir2 = tempfile::tempdir().unwrap();
        let failing =
            Registry::open(dir2.path()).unwrap().with_converter(Converter::External("echo nope; false".into()));
        let oci = failing.store_image(&raw(b"oci"), &c, &machine("skylake")).unwrap();
        assert_eq!(
            failing.convert_format(&oci, ImageFormat::Sif),
            Err(RegistryError::ConversionFailed("nope\n".into()))
        );
    }

    #[test]
    fn tamper_detected() {
        let dir = tempfile::tempdir().unwrap();
        let reg = Registry::open(dir.path()).unwrap();
        reg.set_faults(FaultHooks { tamper_payload: true, ..Default::default() });
        let c = canonical("skylake");
        assert!(matches!(
            reg.store_image(&raw(b"xyz"), &c, &machine("skylake")),
            Err(RegistryError::CorruptPayload { .. })
        ));
        assert_eq!(reg.reuse_lookup(&c.digest, ImageFormat::Oci).unwrap(), None);
        let lying = RawImage { digest: Digest::of(b"other"), ..raw(b"xyz") };
        reg.set_faults(FaultHooks::default());
        assert!(matches!(reg.store_image(&lying, &c, &machine("skylake")), Err(RegistryError::CorruptPayload { .. })));
    }

    #[test]
    fn crash_leaves_no_visible_record() {
        let dir = tempfile::tempdir().unwrap();
        let reg = Registry::open(dir.path()).unwrap();
        reg.set_faults(FaultHooks { crash_after_payload_write: true, ..Default::default() });
        let c = canonical("skylake");
        assert_eq!(reg.store_image(&raw(b"xyz"), &c, &machine("skylake")), Err(RegistryError::InjectedCrash));
        assert_eq!(reg.reuse_lookup(&c.digest, ImageFormat::Oci).unwrap(), None);
        assert!(reg.records().unwrap().is_empty());
        reg.set_faults(FaultHooks::default());
        let r = reg.store_image(&raw(b"xyz"), &c, &machine("skylake")).unwrap();
        assert_eq!(reg.fetch_payload_bytes(&r.image_id).unwrap(), b"xyz");
    }

    #[test]
    fn quota() {
        let dir = tempfile::tempdir().unwrap();
        let reg = Registry::open(dir.path()).unwrap().with_quota(5);
        assert_eq!(
            reg.store_image(&raw(b"too large"), &canonical("skylake"), &machine("skylake")),
            Err(RegistryError::StorageFull { needed: 9, available: 5 })
        );
        assert!(reg.store_image(&raw(b"tiny"), &canonical("zen3"), &machine("zen3")).is_ok());
    }

    #[test]
    fn concurrent_same_digest_stores_once() {
        let dir = tempfile::tempdir().unwrap();
        let reg = Arc::new(Registry::open(dir.path()).unwrap());
        let c = canonical("skylake");
        let ids: Vec<String> = std::thread::scope(|s| {
            let hs: Vec<_> =
                (0..8).map(|_| s.spawn(|| reg.store_image(&raw(b"same"), &c, &machine("skylake")).unwrap())).collect();
            hs.into_iter().map(|h| h.join().unwrap().image_id).collect()
        });
        assert!(ids.windows(2).all(|w| w[0] == w[1]));
        assert_eq!(reg.records().unwrap().len(), 1);
        let created: Vec<u64> = ids.iter().map(|id| reg.record(id).unwrap().created_at).collect();
        assert!(created.windows(2).all(|w| w[0] == w[1]));
    }
}
