use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

/// Settings echoed into every manifest; rationals as `"p/q"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub hbar: String,
    pub theta: Option<String>,
    pub nmax: Option<usize>,
    pub tol: f64,
    pub format: Option<String>,
}

/// Record of one invocation, written next to its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    /// Arguments after the program name, verbatim.
    pub command: Vec<String>,
    pub config: RunConfig,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
    /// Directory relative paths in `command` and `out_dir` resolve against.
    pub working_dir: PathBuf,
    pub out_dir: PathBuf,
    /// File names relative to `out_dir`.
    pub outputs: Vec<String>,
    pub exit_code: i32,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading manifest {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))
    }

    pub fn resolved_out_dir(&self) -> PathBuf {
        self.working_dir.join(&self.out_dir)
    }

    pub fn output_paths(&self) -> impl Iterator<Item = PathBuf> + '_ {
        let dir = self.resolved_out_dir();
        self.outputs.iter().map(move |name| dir.join(name))
    }
}

/// Writes `bytes` to `dir/name` through a temporary file in the same
/// directory, so readers never observe a partial file.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let target = dir.join(name);
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(&target)
        .with_context(|| format!("writing {}", target.display()))?;
    Ok(target)
}
