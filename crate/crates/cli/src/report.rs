//! Output assembly: CSV formatting, content digests, and the run
//! manifest.
//!
//! Every output file is built fully in memory, written in one
//! single-threaded pass, and recorded in the manifest with a SHA-256
//! digest, so a manifest plus its config echo is enough to reproduce and
//! check a run byte for byte.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use mbpre_core::Real;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

/// Formats a float with 17 significant digits, enough to round-trip any
/// double exactly.
pub fn fmt_float(x: Real) -> String {
    format!("{x:.16e}")
}

/// One output file, assembled in memory before anything is written.
pub struct OutputFile {
    pub name: String,
    pub contents: String,
}

impl OutputFile {
    pub fn new(name: impl Into<String>, contents: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            contents: contents.into(),
        }
    }
}

/// Incremental CSV builder: comma delimiter, mandatory header row,
/// floats at full precision.
pub struct Csv {
    buf: String,
    columns: usize,
    cells_in_row: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut buf = String::new();
        buf.push_str(&header.join(","));
        buf.push('\n');
        Self {
            buf,
            columns: header.len(),
            cells_in_row: 0,
        }
    }

    fn push_cell(&mut self, cell: &str) {
        debug_assert!(
            !cell.contains(',') && !cell.contains('\n'),
            "CSV cells must not need quoting: {cell:?}"
        );
        if self.cells_in_row > 0 {
            self.buf.push(',');
        }
        self.buf.push_str(cell);
        self.cells_in_row += 1;
    }

    pub fn str_cell(&mut self, cell: &str) -> &mut Self {
        self.push_cell(cell);
        self
    }

    pub fn int_cell(&mut self, cell: u64) -> &mut Self {
        let mut text = String::new();
        let _ = write!(text, "{cell}");
        self.push_cell(&text);
        self
    }

    pub fn float_cell(&mut self, cell: Real) -> &mut Self {
        let text = fmt_float(cell);
        self.push_cell(&text);
        self
    }

    /// Ends the current row; panics in debug builds if the width is off.
    pub fn end_row(&mut self) {
        debug_assert_eq!(
            self.cells_in_row, self.columns,
            "CSV row width does not match the header"
        );
        self.buf.push('\n');
        self.cells_in_row = 0;
    }

    pub fn finish(self) -> String {
        debug_assert_eq!(self.cells_in_row, 0, "unterminated CSV row");
        self.buf
    }
}

/// Hex SHA-256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for byte in digest {
        let _ = write!(out, "{byte:02x}");
    }
    out
}

/// Pretty-prints a JSON value with a trailing newline. Keys serialize in
/// sorted order, so the output is deterministic.
pub fn to_json_text(value: &Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("JSON serialization cannot fail");
    text.push('\n');
    text
}

/// Builds the run manifest: config echo, artifact version, RNG stream
/// scheme, wall clock, and a digest per output file.
pub fn manifest(
    command: &str,
    config_echo: Value,
    overrides: Value,
    seed: u64,
    replicas: u64,
    workers: Option<usize>,
    wall_clock_seconds: f64,
    outputs: &[OutputFile],
) -> Value {
    let mut digests = Map::new();
    for file in outputs {
        digests.insert(
            file.name.clone(),
            json!({
                "sha256": sha256_hex(file.contents.as_bytes()),
                "bytes": file.contents.len(),
            }),
        );
    }
    json!({
        "artifact_version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": config_echo,
        "overrides": overrides,
        "rng": {
            "base_seed": seed,
            "replicas": replicas,
            "stream_scheme": "replica r draws from stream id r of the base seed",
            "workers": workers.map_or_else(|| json!("auto"), |w| json!(w)),
        },
        "wall_clock_seconds": wall_clock_seconds,
        "outputs": Value::Object(digests),
    })
}

/// Writes every output file plus the manifest into `dir`.
pub fn write_outputs(dir: &Path, outputs: &[OutputFile], manifest: &Value) -> Result<(), String> {
    fs::create_dir_all(dir)
        .map_err(|e| format!("cannot create output directory {}: {e}", dir.display()))?;
    for file in outputs {
        let path = dir.join(&file.name);
        fs::write(&path, file.contents.as_bytes())
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    }
    let path = dir.join("manifest.json");
    fs::write(&path, to_json_text(manifest))
        .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    Ok(())
}
