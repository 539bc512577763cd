use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WrittenFile {
    pub file: String,
    pub sha256: String,
    pub bytes: usize,
}

/// Output directory whose files appear only once fully written (write to a temporary
/// name, then rename).
#[derive(Debug)]
pub struct OutputDir {
    dir: PathBuf,
    written: Vec<WrittenFile>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, contents: &[u8]) -> anyhow::Result<()> {
        let target = self.dir.join(name);
        let tmp = self.dir.join(format!(".{name}.tmp"));
        fs::write(&tmp, contents).with_context(|| format!("writing {}", tmp.display()))?;
        fs::rename(&tmp, &target).with_context(|| format!("renaming to {}", target.display()))?;
        log::info!("wrote {}", target.display());
        self.written.retain(|w| w.file != name);
        self.written.push(WrittenFile { file: name.into(), sha256: sha256_hex(contents), bytes: contents.len() });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> anyhow::Result<()> {
        let mut text = serde_json::to_string_pretty(value).context("serializing report")?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn written(&self) -> &[WrittenFile] {
        &self.written
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Versions {
    pub squeeze_spectra: &'static str,
    pub squeeze_core: &'static str,
}

impl Default for Versions {
    fn default() -> Self {
        Self { squeeze_spectra: env!("CARGO_PKG_VERSION"), squeeze_core: squeeze_core::VERSION }
    }
}

/// `manifest.json`: everything except `wall_time_s` is a function of the config.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub status: String,
    pub config_sha256: String,
    pub seed: u64,
    pub versions: Versions,
    pub workers: usize,
    pub wall_time_s: f64,
    pub outputs: Vec<WrittenFile>,
}
