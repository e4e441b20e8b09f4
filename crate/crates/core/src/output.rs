//! Report files. Every file starts with a header naming the command, the
//! SHA-256 of the effective configuration, the seed and the provenance of the
//! constants. Nothing time dependent is written, so equal configurations give
//! byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Header {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
    /// `None` when the command does not evaluate the constant chain.
    pub constants_provenance: Option<serde_json::Value>,
}

impl Header {
    pub fn new(command: &str, config: &impl Serialize, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            config_hash: config_hash(config),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            constants_provenance: None,
        }
    }

    pub fn with_provenance(mut self, provenance: &impl Serialize) -> Self {
        self.constants_provenance = serde_json::to_value(provenance).ok();
        self
    }

    /// The header as `# key: value` lines.
    pub fn comment_block(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# command: {}", self.command);
        let _ = writeln!(s, "# config_hash: {}", self.config_hash);
        let _ = writeln!(s, "# seed: {}", self.seed);
        let _ = writeln!(s, "# version: {}", self.version);
        match &self.constants_provenance {
            Some(serde_json::Value::Object(map)) => {
                for (k, v) in map {
                    let v = v.as_str().map_or_else(|| v.to_string(), str::to_string);
                    let _ = writeln!(s, "# provenance.{k}: {v}");
                }
            }
            Some(v) => {
                let _ = writeln!(s, "# provenance: {v}");
            }
            None => {}
        }
        s
    }
}

/// SHA-256 (hex) of the canonical JSON form of `config`.
pub fn config_hash(config: &impl Serialize) -> String {
    let canonical = serde_json::to_string(config).expect("config serializes");
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    header: &'a Header,
    body: &'a T,
}

pub fn json_document(header: &Header, body: &impl Serialize) -> String {
    let mut text = serde_json::to_string_pretty(&Document { header, body }).expect("report serializes");
    text.push('\n');
    text
}

/// CSV with the header as leading comment lines, then the column line, the
/// rows and optional trailing comment lines.
pub fn csv_document(header: &Header, columns: &str, rows: &[String], trailer: &[String]) -> String {
    let mut s = header.comment_block();
    s.push_str(columns);
    s.push('\n');
    for row in rows {
        s.push_str(row);
        s.push('\n');
    }
    for line in trailer {
        s.push_str("# ");
        s.push_str(line);
        s.push('\n');
    }
    s
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<std::path::PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Numerical(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| Error::Numerical(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}
