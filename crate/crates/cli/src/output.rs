//! Errors, exit codes and artifact files.

use std::io::{self, Write as _};
use std::path::{Path, PathBuf};

use flowlab::geometry::io::{fmt_f64, write_off};
use flowlab::geometry::SimplicialMesh;
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{json, Value};

use crate::settings::Settings;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Library(#[from] flowlab::Error),
    #[error("cannot write {}: {message}", path.display())]
    Write { path: PathBuf, message: String },
}

impl CliError {
    /// 2 for bad input, 3 for numerical failures and unwritable output.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Invalid(_) => 2,
            Self::Library(e) if e.is_validation() => 2,
            Self::Library(_) | Self::Write { .. } => 3,
        }
    }
}

pub fn lib<E: Into<flowlab::Error>>(e: E) -> CliError {
    CliError::Library(e.into())
}

/// Artifact directory of one run.
pub struct Artifacts {
    dir: PathBuf,
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| write_err(dir, e))?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    pub fn text(&self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| write_err(parent, e))?;
        }
        std::fs::write(&path, contents).map_err(|e| write_err(&path, e))?;
        Ok(path)
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut s = to_json(value);
        s.push('\n');
        self.text(name, &s)
    }

    pub fn mesh(&self, name: &str, mesh: &SimplicialMesh) -> Result<PathBuf, CliError> {
        self.text(name, &write_off(mesh))
    }

    pub fn manifest(&self, command: &str, settings: &Settings, stop_reason: Option<&str>) -> Result<PathBuf, CliError> {
        self.json("manifest.json", &manifest(command, settings, stop_reason))
    }
}

pub fn manifest(command: &str, settings: &Settings, stop_reason: Option<&str>) -> Value {
    json!({
        "command": command,
        "flags": settings.resolved(),
        "seed": settings.resolved().get("seed").cloned().unwrap_or(Value::from(0)),
        "stop_reason": stop_reason,
        "version": env!("CARGO_PKG_VERSION"),
    })
}

/// Pretty JSON with every float printed to 17 significant digits.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FullPrecision(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("artifact values serialize");
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

/// Prints to stdout; a closed pipe is not an error.
pub fn emit(text: &str) {
    let _ = writeln!(std::io::stdout(), "{text}");
}

struct FullPrecision<'a>(PrettyFormatter<'a>);

impl Formatter for FullPrecision<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_array(writer)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object(writer)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, writer: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object_value(writer)
    }
}

fn write_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Write {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}
