//! Content-addressed result cache.
//!
//! An entry is `<digest>.json`, where the digest is the hex of the first 16
//! bytes of SHA-256 over the canonical JSON of (tool version, workflow,
//! model, solver settings). Entries are written to a temporary file and
//! renamed into place, so readers never see partial writes.

use bogobind::canonical;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CacheEntry {
    pub digest: String,
    pub tool_version: String,
    pub workflow: String,
    /// Seconds since the Unix epoch at write time; not part of the payload.
    pub timestamp: u64,
    pub tolerance: f64,
    pub residual_norm: f64,
    /// SHA-256 of the canonical payload.
    pub payload_sha256: String,
    pub payload: Value,
}

#[derive(Debug, PartialEq)]
pub enum Lookup {
    Hit(Value),
    Miss,
    /// The entry existed but failed verification and was removed.
    Discarded(String),
}

pub fn digest(workflow: &str, model: &impl Serialize, settings: &impl Serialize) -> String {
    #[derive(Serialize)]
    struct Key<'a, M: Serialize, S: Serialize> {
        tool_version: &'a str,
        workflow: &'a str,
        model: &'a M,
        settings: &'a S,
    }
    let key = Key { tool_version: TOOL_VERSION, workflow, model, settings };
    let text = canonical::to_string(&key).expect("cache keys serialize");
    hex::encode(&Sha256::digest(text.as_bytes())[..16])
}

fn payload_hash(payload: &Value) -> String {
    let text = canonical::to_string(payload).expect("payloads serialize");
    hex::encode(Sha256::digest(text.as_bytes()))
}

pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn open(dir: &Path) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Cache { dir: dir.to_path_buf() })
    }

    pub fn path(&self, digest: &str) -> PathBuf {
        self.dir.join(format!("{digest}.json"))
    }

    pub fn lookup(&self, digest: &str) -> Lookup {
        let path = self.path(digest);
        let Ok(text) = std::fs::read_to_string(&path) else {
            return Lookup::Miss;
        };
        match verify(digest, &text) {
            Ok(payload) => Lookup::Hit(payload),
            Err(why) => {
                let _ = std::fs::remove_file(&path);
                Lookup::Discarded(why)
            }
        }
    }

    pub fn store(
        &self,
        digest: &str,
        workflow: &str,
        tolerance: f64,
        residual_norm: f64,
        payload: &Value,
    ) -> std::io::Result<()> {
        let entry = CacheEntry {
            digest: digest.to_string(),
            tool_version: TOOL_VERSION.to_string(),
            workflow: workflow.to_string(),
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            tolerance,
            residual_norm,
            payload_sha256: payload_hash(payload),
            payload: payload.clone(),
        };
        let text = canonical::to_string_pretty(&entry).map_err(std::io::Error::other)?;
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir)?;
        std::io::Write::write_all(&mut tmp, text.as_bytes())?;
        tmp.persist(self.path(digest)).map_err(|e| e.error)?;
        Ok(())
    }
}

fn verify(digest: &str, text: &str) -> Result<Value, String> {
    let entry: CacheEntry = serde_json::from_str(text).map_err(|e| format!("unreadable entry: {e}"))?;
    if entry.digest != digest || entry.tool_version != TOOL_VERSION {
        return Err("entry does not match its key".into());
    }
    if payload_hash(&entry.payload) != entry.payload_sha256 {
        return Err("payload checksum mismatch".into());
    }
    if entry.residual_norm.is_nan() || entry.residual_norm > entry.tolerance {
        return Err(format!("stored residual {} exceeds tolerance {}", entry.residual_norm, entry.tolerance));
    }
    Ok(entry.payload)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn digest_sees_the_last_digits() {
        let a = digest("ed", &json!({"lambda": 0.125}), &json!({}));
        let b = digest("ed", &json!({"lambda": 0.125 + 1e-13}), &json!({}));
        assert_eq!(a.len(), 32);
        assert_ne!(a, b);
        assert_eq!(a, digest("ed", &json!({"lambda": 0.125}), &json!({})));
    }

    #[test]
    fn store_then_hit_then_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::open(dir.path()).unwrap();
        let payload = json!({"energy": -0.5, "n": 3});
        assert_eq!(cache.lookup("abc"), Lookup::Miss);
        cache.store("abc", "ed", 1e-10, 1e-12, &payload).unwrap();
        assert_eq!(cache.lookup("abc"), Lookup::Hit(payload));

        let path = cache.path("abc");
        let text = std::fs::read_to_string(&path).unwrap().replace("-5.0000000000000000e-1", "-4.0000000000000000e-1");
        std::fs::write(&path, text).unwrap();
        assert!(matches!(cache.lookup("abc"), Lookup::Discarded(_)));
        assert!(!path.exists());
    }

    #[test]
    fn residual_above_tolerance_is_discarded() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::open(dir.path()).unwrap();
        cache.store("k", "ed", 1e-10, 1e-6, &json!({})).unwrap();
        assert!(matches!(cache.lookup("k"), Lookup::Discarded(_)));
    }
}
