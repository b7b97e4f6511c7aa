//! Table and manifest writing.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::commands::Run;
use crate::error::{CliError, Result};
use crate::table::{Format, OutputTable};

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output prefix: writes PREFIX.csv and PREFIX.manifest.json, or PREFIX.json.
    /// Without it the table goes to stdout.
    #[arg(long, value_name = "PREFIX")]
    pub out: Option<PathBuf>,
    /// Table serialization.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Arguments after the program name.
    pub argv: Vec<String>,
    pub parameters: BTreeMap<String, Value>,
    pub seeds: Vec<u64>,
    pub version: String,
    pub wall_time_s: f64,
    /// Digest of the table in its CSV form, whatever format was written.
    pub table_sha256: String,
    pub outputs: Vec<FileDigest>,
}

#[derive(Serialize)]
struct Bundle<'a> {
    manifest: &'a RunManifest,
    table: &'a OutputTable,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s: OsString = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Writes `bytes` to a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Usage(format!("{} is not a file path", path.display())))?;
    let mut tmp_name = OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".{}.tmp", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(|e| CliError::io(path, e))
}

fn to_json(value: &impl Serialize) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Numerical(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn emit(command: &str, argv: Vec<String>, run: Run, out: &OutputArgs, start: Instant) -> Result<RunManifest> {
    run.table.validate()?;
    let csv = run.table.to_csv();
    let mut manifest = RunManifest {
        command: command.to_string(),
        argv,
        parameters: run.parameters,
        seeds: run.seeds,
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_s: 0.0,
        table_sha256: sha256_hex(csv.as_bytes()),
        outputs: Vec::new(),
    };
    match (&out.out, out.format) {
        (None, Format::Csv) => print!("{csv}"),
        (None, Format::Json) => {
            manifest.wall_time_s = start.elapsed().as_secs_f64();
            print!("{}", to_json(&Bundle { manifest: &manifest, table: &run.table })?);
        }
        (Some(prefix), Format::Csv) => {
            let path = with_suffix(prefix, ".csv");
            write_atomic(&path, csv.as_bytes())?;
            manifest.outputs.push(FileDigest {
                file: path.display().to_string(),
                sha256: manifest.table_sha256.clone(),
            });
            manifest.wall_time_s = start.elapsed().as_secs_f64();
            write_atomic(&with_suffix(prefix, ".manifest.json"), to_json(&manifest)?.as_bytes())?;
        }
        (Some(prefix), Format::Json) => {
            manifest.wall_time_s = start.elapsed().as_secs_f64();
            let path = with_suffix(prefix, ".json");
            write_atomic(&path, to_json(&Bundle { manifest: &manifest, table: &run.table })?.as_bytes())?;
        }
    }
    Ok(manifest)
}

/// Reads a manifest file, or the manifest inside a JSON output.
pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut value: Value =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    if let Some(inner) = value.get_mut("manifest") {
        value = inner.take();
    }
    serde_json::from_value(value).map_err(|e| CliError::Usage(format!("{}: not a manifest: {e}", path.display())))
}
