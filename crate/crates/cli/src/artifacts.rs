//! Output directories with a manifest of what was written.
//!
//! Each run leaves `config.toml` (the resolved configuration), its outputs,
//! and `manifest.json` listing the config hash, the seed and the SHA-256 of
//! every output. `verify` re-hashes all three against each other.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use bigmac::io::Provenance;
use serde::{Deserialize, Serialize};

use crate::config::{hash_bytes, hash_text, FlatConfig};
use crate::error::{CliError, CliResult, Classify};

pub const MANIFEST: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    /// File name to SHA-256 of its contents.
    pub files: BTreeMap<String, String>,
}

pub struct Artifacts {
    dir: PathBuf,
    command: String,
    prov: Provenance,
    files: BTreeMap<String, String>,
}

impl Artifacts {
    pub fn create(dir: &Path, command: &str, cfg: &FlatConfig, seed: u64) -> CliResult<Self> {
        fs::create_dir_all(dir).config_err(format!("cannot create output directory {}", dir.display()))?;
        let canonical = cfg.canonical();
        fs::write(dir.join(CONFIG_FILE), &canonical).config_err(format!("cannot write to {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            command: command.to_string(),
            prov: Provenance {
                config_hash: hash_text(&canonical),
                seed,
            },
            files: BTreeMap::new(),
        })
    }

    pub fn provenance(&self) -> &Provenance {
        &self.prov
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Writes `name` through `fill` and records its digest.
    pub fn write<F>(&mut self, name: &str, fill: F) -> CliResult<PathBuf>
    where
        F: FnOnce(&mut BufWriter<File>, &Provenance) -> anyhow::Result<()>,
    {
        let path = self.dir.join(name);
        let file = File::create(&path).config_err(format!("cannot create {}", path.display()))?;
        let mut w = BufWriter::new(file);
        fill(&mut w, &self.prov)
            .and_then(|_| w.flush().map_err(Into::into))
            .config_err(format!("cannot write {}", path.display()))?;
        drop(w);
        let bytes = fs::read(&path).config_err(format!("cannot read back {}", path.display()))?;
        self.files.insert(name.to_string(), hash_bytes(&bytes));
        Ok(path)
    }

    pub fn write_json(&mut self, name: &str, v: &serde_json::Value) -> CliResult<PathBuf> {
        self.write(name, |w, _| {
            serde_json::to_writer_pretty(&mut *w, v)?;
            writeln!(w)?;
            Ok(())
        })
    }

    pub fn finish(self) -> CliResult<Manifest> {
        let manifest = Manifest {
            command: self.command,
            config_hash: self.prov.config_hash,
            seed: self.prov.seed,
            files: self.files,
        };
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(self.dir.join(MANIFEST), text + "\n").config_err("cannot write manifest")?;
        Ok(manifest)
    }
}

/// Outcome of checking one output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Verification {
    pub config_hash: String,
    pub checked: usize,
    pub problems: Vec<String>,
}

pub fn verify_dir(dir: &Path) -> CliResult<Verification> {
    let manifest_text = fs::read_to_string(dir.join(MANIFEST))
        .config_err(format!("no readable {MANIFEST} in {}", dir.display()))?;
    let manifest: Manifest = serde_json::from_str(&manifest_text).config_err("manifest is malformed")?;
    let mut problems = Vec::new();
    match fs::read_to_string(dir.join(CONFIG_FILE)) {
        Ok(text) => {
            let rehash = hash_text(&text);
            if rehash != manifest.config_hash {
                problems.push(format!("{CONFIG_FILE} hashes to {rehash}, manifest says {}", manifest.config_hash));
            }
        }
        Err(e) => problems.push(format!("{CONFIG_FILE}: {e}")),
    }
    for (name, digest) in &manifest.files {
        let bytes = match fs::read(dir.join(name)) {
            Ok(b) => b,
            Err(e) => {
                problems.push(format!("{name}: {e}"));
                continue;
            }
        };
        if &hash_bytes(&bytes) != digest {
            problems.push(format!("{name}: contents changed since the run"));
        }
        let text = String::from_utf8_lossy(&bytes);
        if !text.contains(&manifest.config_hash) {
            problems.push(format!("{name}: config hash not embedded"));
        }
        if !text.contains(&manifest.seed.to_string()) {
            problems.push(format!("{name}: seed not embedded"));
        }
    }
    Ok(Verification {
        config_hash: manifest.config_hash,
        checked: manifest.files.len(),
        problems,
    })
}

impl Verification {
    pub fn into_result(self) -> CliResult<Self> {
        if self.problems.is_empty() {
            Ok(self)
        } else {
            Err(CliError::mismatch(self.problems.join("\n")))
        }
    }
}
