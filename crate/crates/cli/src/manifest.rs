//! Run manifests: every subcommand records its resolved arguments, the
//! content hash of every input file, and the files it wrote. Manifests
//! contain no timestamps, so identical runs produce identical bytes.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::errors::CliError;

/// Files a dataset directory may hold, in publication order.
pub const DATASET_FILES: &[&str] = &[
    "entity2id.tsv",
    "relation2id.tsv",
    "time2id.tsv",
    "train.tsv",
    "train_interval.tsv",
    "valid.tsv",
    "valid_interval.tsv",
    "test.tsv",
    "test_interval.tsv",
    "meta.json",
];
use tkgbench_core::hash::sha256_file;

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub args: BTreeMap<String, String>,
    /// Input path → sha256 of its content.
    pub inputs: BTreeMap<String, String>,
    /// Files written into the output directory, sorted.
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        Manifest {
            command: command.to_string(),
            args: BTreeMap::new(),
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn arg(&mut self, key: &str, value: impl ToString) {
        self.args.insert(key.to_string(), value.to_string());
    }

    pub fn input(&mut self, path: &Path) -> Result<(), CliError> {
        let hash = sha256_file(path)
            .map_err(|e| CliError::load(format!("{}: {e}", path.display())))?;
        self.inputs.insert(path.display().to_string(), hash);
        Ok(())
    }

    /// Hashes every dataset file present in `dir`.
    pub fn input_dataset(&mut self, dir: &Path) -> Result<(), CliError> {
        for name in DATASET_FILES {
            let path = dir.join(name);
            if path.exists() {
                self.input(&path)?;
            }
        }
        Ok(())
    }

    pub fn output(&mut self, name: &str) {
        self.outputs.push(name.to_string());
    }

    pub fn write(&mut self, out_dir: &Path) -> Result<(), CliError> {
        self.outputs.push("manifest.json".to_string());
        self.outputs.sort();
        self.outputs.dedup();
        let mut text =
            serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        fs::write(out_dir.join("manifest.json"), text)?;
        Ok(())
    }
}

/// Fixed-precision float field for CSV cells.
pub fn f6(x: f64) -> String {
    format!("{x:.6}")
}

pub fn write_text(out_dir: &Path, name: &str, content: &str) -> Result<(), CliError> {
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join(name), content)?;
    Ok(())
}

/// The dataset's display name in report rows: its directory basename.
pub fn dataset_name(dir: &Path) -> String {
    dir.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string())
}
