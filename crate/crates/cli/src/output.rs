use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::commands::Failure;

pub struct Sink {
    dir: PathBuf,
    written: Vec<String>,
}

impl Sink {
    pub fn new(dir: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
        Ok(Sink {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), Failure> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::Io(e.to_string()))?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// CSV with a header row; cells are written verbatim.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), Failure> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Failure::Io(e.to_string());
        w.write_record(header).map_err(io)?;
        for r in rows {
            w.write_record(r).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Failure::Io(e.to_string()))?;
        self.write(name, &bytes)
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), Failure> {
        let p = self.path(name);
        fs::write(&p, bytes).map_err(|e| Failure::Io(format!("{}: {e}", p.display())))?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// `manifest_<command>.json`: inputs, versions, seed, files and timing.
    pub fn manifest(&mut self, command: &str, inputs: Value, seed: u64, wall: f64) -> Result<(), Failure> {
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let m = json!({
            "command": command,
            "inputs": inputs,
            "version": env!("CARGO_PKG_VERSION"),
            "seed": seed,
            "threads": rayon::current_num_threads(),
            "files": self.written.clone(),
            "wall_time_s": wall,
            "timestamp": timestamp,
        });
        let name = format!("manifest_{command}.json");
        let mut text = serde_json::to_string_pretty(&m).map_err(|e| Failure::Io(e.to_string()))?;
        text.push('\n');
        let p = self.path(&name);
        fs::write(&p, text).map_err(|e| Failure::Io(format!("{}: {e}", p.display())))
    }
}

/// Shortest round-trip decimal form.
pub fn num(x: f64) -> String {
    format!("{x}")
}
