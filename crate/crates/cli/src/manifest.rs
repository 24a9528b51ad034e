//! Output directory bookkeeping and the run manifest.

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::CliError;

pub const MANIFEST: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Artifacts written during one run, all stamped with the config hash.
pub struct Run {
    pub config: RunConfig,
    pub hash: String,
    dir: PathBuf,
    start: Instant,
    artifacts: Vec<String>,
    inputs: Vec<Value>,
    outputs: Value,
}

impl Run {
    pub fn start(config: RunConfig) -> Result<Run, CliError> {
        // the output directory does not affect results
        let mut canonical = serde_json::to_value(&config).expect("config serializes");
        if let Some(obj) = canonical.as_object_mut() {
            obj.remove("out");
        }
        let hash = sha256_hex(canonical.to_string().as_bytes());
        let dir = config.out.clone();
        fs::create_dir_all(&dir)
            .map_err(|e| CliError::Validation(format!("cannot create output directory {}: {e}", dir.display())))?;
        let probe = dir.join(".drops2d-write-test");
        fs::write(&probe, b"")
            .and_then(|_| fs::remove_file(&probe))
            .map_err(|e| CliError::Validation(format!("output directory {} is not writable: {e}", dir.display())))?;
        Ok(Run {
            config,
            hash,
            dir,
            start: Instant::now(),
            artifacts: Vec::new(),
            inputs: Vec::new(),
            outputs: Value::Null,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Records the hash of an input file the run read.
    pub fn record_input(&mut self, spec: &str) {
        if let Ok(bytes) = fs::read(spec) {
            self.inputs.push(json!({ "path": spec, "sha256": sha256_hex(&bytes) }));
        }
    }

    /// Writes `{config_hash, rng_seed, result}` as pretty JSON. The payload
    /// holds no timings, so reruns of a deterministic config match byte
    /// for byte.
    pub fn write_json(&mut self, name: &str, result: &impl Serialize) -> Result<Value, CliError> {
        let payload = json!({
            "config_hash": self.hash,
            "rng_seed": self.config.rng_seed,
            "result": result,
        });
        let text = serde_json::to_string_pretty(&payload).expect("payload serializes") + "\n";
        self.write_text(name, &text)?;
        Ok(payload)
    }

    /// Stamps a CSV written by the library with a leading comment line.
    pub fn stamp_csv(&mut self, name: &str) -> Result<(), CliError> {
        let body = fs::read_to_string(self.path(name)).map_err(|e| CliError::Io(e.to_string()))?;
        self.write_text(name, &format!("# config_hash={}\n{body}", self.hash))
    }

    pub fn write_svg(&mut self, name: &str, svg: &str) -> Result<(), CliError> {
        self.write_text(name, &format!("<!-- config_hash={} -->\n{svg}", self.hash))
    }

    pub fn write_region(&mut self, name: &str, region: &drops2d::Region) -> Result<(), CliError> {
        let raw: Value = serde_json::from_str(&drops2d::geometry::io::region_to_json(region)).expect("region json");
        let mut obj = raw.as_object().cloned().unwrap_or_default();
        obj.insert("config_hash".into(), json!(self.hash));
        let text = serde_json::to_string(&Value::Object(obj)).expect("region serializes") + "\n";
        self.write_text(name, &text)
    }

    fn write_text(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        fs::write(self.path(name), text).map_err(|e| CliError::Io(format!("writing {name}: {e}")))?;
        if !self.artifacts.iter().any(|a| a == name) {
            self.artifacts.push(name.to_string());
        }
        Ok(())
    }

    pub fn set_outputs(&mut self, outputs: Value) {
        self.outputs = outputs;
    }

    /// Writes the manifest; `error` marks the run as failed.
    pub fn finish(&self, error: Option<(&str, u8)>) -> Result<(), CliError> {
        let threads = rayon::current_num_threads();
        let manifest = json!({
            "tool": "drops2d",
            "versions": {
                "cli": env!("CARGO_PKG_VERSION"),
                "core": drops2d::VERSION,
            },
            "subcommand": self.config.command.name(),
            "config": self.config,
            "config_hash": self.hash,
            "rng_seed": self.config.rng_seed,
            "deterministic": self.config.deterministic,
            "threads": threads,
            "wall_seconds": self.start.elapsed().as_secs_f64(),
            "inputs": self.inputs,
            "artifacts": self.artifacts,
            "outputs": self.outputs,
            "failed": error.is_some(),
            "error": error.map(|(m, _)| m),
            "exit_code": error.map_or(0, |(_, c)| c),
        });
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        fs::write(self.path(MANIFEST), text).map_err(|e| CliError::Io(format!("writing {MANIFEST}: {e}")))
    }
}
