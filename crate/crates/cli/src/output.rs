//! CSV tables with a commented config header, and the run manifest.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::params::{Kind, Params};

pub const TOOL: &str = "spinthermal";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST_FILE: &str = "manifest.json";

/// Shortest decimal that parses back to the same `f64`; scientific notation
/// outside `[1e-5, 1e16)`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub struct Table {
    pub name: String,
    columns: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&'static str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, kind: Kind, params: &Params) -> anyhow::Result<Vec<u8>> {
        let mut buf = Vec::new();
        let mut header = vec![
            ("tool".to_string(), TOOL.to_string()),
            ("version".to_string(), VERSION.to_string()),
            ("command".to_string(), kind.name().to_string()),
            ("table".to_string(), self.name.clone()),
        ];
        if let serde_json::Value::Object(map) = serde_json::to_value(params)? {
            for (k, v) in map {
                header.push((k, serde_json::to_string(&v)?));
            }
        }
        for (k, v) in header {
            buf.extend_from_slice(format!("# {k} = {v}\n").as_bytes());
        }
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: Kind,
    /// Fully resolved parameters, seed included.
    pub config: Params,
    pub seed: u64,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    /// Worker threads used; results do not depend on it.
    pub threads: Option<usize>,
    /// File name to SHA-256 of its contents.
    pub outputs: BTreeMap<String, String>,
}

/// Rendered output files in write order.
pub type Files = Vec<(String, Vec<u8>)>;

pub fn write_run(
    dir: &Path,
    kind: Kind,
    params: &Params,
    threads: Option<usize>,
    files: &Files,
) -> anyhow::Result<Manifest> {
    std::fs::create_dir_all(dir)?;
    let mut outputs = BTreeMap::new();
    for (name, bytes) in files {
        std::fs::write(dir.join(name), bytes)?;
        outputs.insert(name.clone(), sha256_hex(bytes));
    }
    let timestamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let manifest = Manifest {
        tool: TOOL.into(),
        version: VERSION.into(),
        command: kind,
        config: params.clone(),
        seed: params.seed(),
        timestamp,
        threads,
        outputs,
    };
    std::fs::write(
        dir.join(MANIFEST_FILE),
        serde_json::to_string_pretty(&manifest)? + "\n",
    )?;
    Ok(manifest)
}
