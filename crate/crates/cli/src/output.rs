//! CSV and JSON artifacts with a provenance header.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliResult;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub schema_version: u32,
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
    pub version: String,
}

impl Provenance {
    pub fn new(command: &str, config_bytes: &[u8], seed: u64) -> Self {
        let digest = Sha256::digest(config_bytes);
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            config_sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// Output directory plus the provenance stamped on every file written to it.
pub struct Artifacts {
    dir: PathBuf,
    provenance: Provenance,
}

impl Artifacts {
    pub fn create(dir: &Path, provenance: Provenance) -> CliResult<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            provenance,
        })
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// `# key: value` header lines followed by a headed CSV table.
    pub fn write_csv<T: Serialize>(&self, name: &str, rows: &[T]) -> CliResult<PathBuf> {
        let path = self.path(name);
        let mut w = BufWriter::new(File::create(&path)?);
        let p = &self.provenance;
        writeln!(w, "# schema_version: {}", p.schema_version)?;
        writeln!(w, "# command: {}", p.command)?;
        writeln!(w, "# config_sha256: {}", p.config_sha256)?;
        writeln!(w, "# seed: {}", p.seed)?;
        writeln!(w, "# magiclab_version: {}", p.version)?;
        let mut csv = csv::Writer::from_writer(w);
        for r in rows {
            csv.serialize(r)?;
        }
        csv.flush()?;
        Ok(path)
    }

    /// `{"provenance": …, "result": …}`.
    pub fn write_json<T: Serialize>(&self, name: &str, result: &T) -> CliResult<PathBuf> {
        #[derive(Serialize)]
        struct Doc<'a, T> {
            provenance: &'a Provenance,
            result: &'a T,
        }
        let path = self.path(name);
        let mut w = BufWriter::new(File::create(&path)?);
        serde_json::to_writer_pretty(
            &mut w,
            &Doc {
                provenance: &self.provenance,
                result,
            },
        )
        .map_err(std::io::Error::from)?;
        writeln!(w)?;
        w.flush()?;
        Ok(path)
    }

    /// One line per item.
    pub fn write_lines<I: IntoIterator<Item = String>>(
        &self,
        name: &str,
        lines: I,
    ) -> CliResult<PathBuf> {
        let path = self.path(name);
        let mut w = BufWriter::new(File::create(&path)?);
        for l in lines {
            writeln!(w, "{l}")?;
        }
        w.flush()?;
        Ok(path)
    }
}

/// Data rows of a CSV written by [`Artifacts::write_csv`], header block dropped.
pub fn data_rows(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}
