use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::args::Format;
use crate::error::{CliError, Result};

/// One experiment outcome. `satisfied ⇔ lhs ≤ rhs + tolerance`.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub params: Value,
    pub seed: u64,
    pub inputs_digest: String,
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
    pub slack: f64,
    pub error_estimate: f64,
    pub tolerance: f64,
    pub wall_time_ms: u64,
    #[serde(flatten)]
    pub details: Map<String, Value>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Shared state of one subcommand run: echoed parameters, digests of the
/// files read, the debug rhs scale and the clock.
pub struct Context {
    command: &'static str,
    params: Value,
    seed: u64,
    rhs_scale: f64,
    timing: bool,
    files: BTreeMap<String, String>,
    start: Instant,
}

impl Context {
    pub fn new(command: &'static str, args: &impl Serialize, seed: u64, rhs_scale: f64, timing: bool) -> Self {
        let mut params = serde_json::to_value(args).unwrap_or(Value::Null);
        if rhs_scale != 1.0 {
            if let Value::Object(map) = &mut params {
                map.insert("rhs_scale".into(), json!(rhs_scale));
            }
        }
        Context {
            command,
            params,
            seed,
            rhs_scale,
            timing,
            files: BTreeMap::new(),
            start: Instant::now(),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Reads a file and records its digest under `key`.
    pub fn read(&mut self, key: &str, path: &Path) -> Result<String> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        self.files.insert(key.to_string(), sha256_hex(text.as_bytes()));
        Ok(text)
    }

    /// Reads and parses a JSON file.
    pub fn read_json<T: serde::de::DeserializeOwned>(&mut self, key: &str, path: &Path) -> Result<T> {
        let text = self.read(key, path)?;
        serde_json::from_str(&text).map_err(|source| CliError::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    fn digest(&self) -> String {
        let canonical = json!({
            "command": self.command,
            "params": self.params,
            "seed": self.seed,
            "files": self.files,
        });
        sha256_hex(canonical.to_string().as_bytes())
    }

    /// Builds a report with `tolerance = rel_tol·rhs + abs_tol` on the scaled
    /// right-hand side.
    pub fn report(
        &self,
        lhs: f64,
        rhs: f64,
        rel_tol: f64,
        abs_tol: f64,
        error_estimate: f64,
        details: Value,
    ) -> Report {
        let rhs = rhs * self.rhs_scale;
        let tolerance = rel_tol * rhs.abs() + abs_tol;
        let details = match details {
            Value::Object(map) => map,
            Value::Null => Map::new(),
            other => Map::from_iter([("details".to_string(), other)]),
        };
        Report {
            command: self.command.to_string(),
            params: self.params.clone(),
            seed: self.seed,
            inputs_digest: self.digest(),
            lhs,
            rhs,
            satisfied: lhs <= rhs + tolerance,
            slack: rhs - lhs,
            error_estimate,
            tolerance,
            wall_time_ms: if self.timing {
                self.start.elapsed().as_millis() as u64
            } else {
                0
            },
            details,
        }
    }
}

const CSV_HEADER: [&str; 12] = [
    "command",
    "seed",
    "inputs_digest",
    "lhs",
    "rhs",
    "satisfied",
    "slack",
    "error_estimate",
    "tolerance",
    "wall_time_ms",
    "params",
    "details",
];

/// Writes reports as JSON Lines or as CSV with a header row.
pub fn emit<W: Write>(format: Format, reports: &[Report], mut out: W) -> Result<()> {
    let fail = |e: &dyn std::fmt::Display| CliError::Output(e.to_string());
    match format {
        Format::Json => {
            for r in reports {
                let line = serde_json::to_string(r).map_err(|e| fail(&e))?;
                writeln!(out, "{line}").map_err(|e| fail(&e))?;
            }
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(CSV_HEADER).map_err(|e| fail(&e))?;
            for r in reports {
                w.write_record([
                    r.command.clone(),
                    r.seed.to_string(),
                    r.inputs_digest.clone(),
                    r.lhs.to_string(),
                    r.rhs.to_string(),
                    r.satisfied.to_string(),
                    r.slack.to_string(),
                    r.error_estimate.to_string(),
                    r.tolerance.to_string(),
                    r.wall_time_ms.to_string(),
                    r.params.to_string(),
                    Value::Object(r.details.clone()).to_string(),
                ])
                .map_err(|e| fail(&e))?;
            }
            w.flush().map_err(|e| fail(&e))?;
            return Ok(());
        }
    }
    out.flush().map_err(|e| fail(&e))
}
