use std::path::{Path, PathBuf};

use plp_core::gfa;
use plp_core::GridFunction;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

/// Provenance columns appended to every CSV row.
#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub symbol: String,
    pub b: String,
    pub window: String,
    pub grid: String,
}

impl Provenance {
    pub const HEADER: [&'static str; 4] = ["symbol", "b", "window", "grid"];

    pub fn fields(&self) -> [String; 4] {
        [self.symbol.clone(), self.b.clone(), self.window.clone(), self.grid.clone()]
    }
}

/// Output directory plus the list of artifacts written so far.
pub struct Out {
    dir: PathBuf,
    pub artifacts: Vec<(String, String)>,
}

fn io(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::io(format!("{}: {e}", path.display()))
}

impl Out {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        Ok(Out {
            dir: dir.to_path_buf(),
            artifacts: Vec::new(),
        })
    }

    fn record(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| io(&path, e))?;
        let digest: String = Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect();
        self.artifacts.push((name.to_string(), digest));
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(e.to_string()))?;
        text.push('\n');
        self.record(name, text.as_bytes())
    }

    /// CSV with `header` followed by the provenance columns.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>], prov: &Provenance) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let full: Vec<&str> = header.iter().copied().chain(Provenance::HEADER).collect();
        w.write_record(&full).map_err(|e| CliError::io(e.to_string()))?;
        let tail = prov.fields();
        for row in rows {
            w.write_record(row.iter().chain(tail.iter())).map_err(|e| CliError::io(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::io(e.to_string()))?;
        self.record(name, &bytes)
    }

    pub fn gfa(&mut self, name: &str, f: &GridFunction, complex: bool) -> Result<(), CliError> {
        let mut bytes = Vec::new();
        gfa::write(&mut bytes, f, complex)?;
        self.record(name, &bytes)
    }

    /// `<name>.gfa` plus a `<name>.json` sidecar.
    pub fn gfa_with_sidecar<T: Serialize>(&mut self, name: &str, f: &GridFunction, complex: bool, meta: &T) -> Result<(), CliError> {
        self.gfa(&format!("{name}.gfa"), f, complex)?;
        self.json(&format!("{name}.json"), meta)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

/// Shortest round-trip decimal form.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}
