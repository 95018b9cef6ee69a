//! Output assembly: 17-significant-digit float formatting, provenance
//! headers, and JSON/CSV emission to stdout or a file.

use std::fs;
use std::io::{self, Write as _};
use std::path::Path;

use naegs_core::{Error, Result};
use serde::Serialize;

/// A float rendered with 17 significant digits (1 leading + 16 fractional in
/// scientific notation), enough for exact f64 round-tripping.
pub fn sci(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

/// JSON formatter printing every float with 17 significant digits.
struct SciFormatter;

impl serde_json::ser::Formatter for SciFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// Serialize to a JSON string with 17-digit floats and a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SciFormatter);
    value
        .serialize(&mut ser)
        .expect("in-memory JSON serialization cannot fail");
    let mut s = String::from_utf8(buf).expect("serde_json emits UTF-8");
    s.push('\n');
    s
}

/// Run metadata attached to every output document.
#[derive(Debug, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'static str,
    pub seed: u64,
    pub params: serde_json::Value,
    /// RFC 3339 UTC; omitted under --no-timestamp so outputs are
    /// byte-identical across runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

impl Provenance {
    pub fn new(
        subcommand: &'static str,
        seed: u64,
        params: serde_json::Value,
        no_timestamp: bool,
    ) -> Self {
        Provenance {
            tool: "naegs",
            version: env!("CARGO_PKG_VERSION"),
            subcommand,
            seed,
            params,
            timestamp: (!no_timestamp).then(|| chrono::Utc::now().to_rfc3339()),
        }
    }

    /// The same metadata as `#`-prefixed CSV comment lines.
    pub fn csv_comments(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!(
            "# tool = {} {} | subcommand = {} | seed = {}\n",
            self.tool, self.version, self.subcommand, self.seed
        ));
        s.push_str(&format!("# params = {}\n", self.params));
        if let Some(ts) = &self.timestamp {
            s.push_str(&format!("# timestamp = {ts}\n"));
        }
        s
    }
}

/// A provenance-wrapped JSON result document.
#[derive(Debug, Serialize)]
pub struct Doc<T: Serialize> {
    pub provenance: Provenance,
    pub result: T,
}

/// Write `text` to `path` if given, else to stdout. I/O errors carry the
/// offending path.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)
            .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", p.display()))),
        None => {
            io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| Error::InvalidInput(format!("cannot write stdout: {e}")))?;
            Ok(())
        }
    }
}

/// Read a whole file, surfacing the path on failure.
pub fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))
}
