//! On-disk formats. Text formats write floats with `{:?}`, which round-trips
//! `f64` exactly.

pub mod cache;
pub mod checkpoint;
pub mod clicklog;
pub mod heatmap;
pub mod model;
pub mod profiles;
pub mod report;

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Writes through a buffered file, creating parent directories.
pub(crate) fn write_with<F>(path: &Path, body: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
{
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub(crate) fn parse_f64(path: &Path, line: usize, s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| Error::parse(path, line, format!("invalid number {s:?}")))
}

pub(crate) fn join_f64(values: &[f64], sep: &str) -> String {
    values
        .iter()
        .map(|v| format!("{v:?}"))
        .collect::<Vec<_>>()
        .join(sep)
}

/// Line reader for the `key value` text formats.
pub(crate) struct KeyValueLines<'a> {
    path: &'a Path,
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    pub line: usize,
}

impl<'a> KeyValueLines<'a> {
    pub fn new(path: &'a Path, text: &'a str) -> Self {
        Self {
            path,
            lines: text.lines().enumerate(),
            line: 0,
        }
    }

    pub fn next_line(&mut self) -> Result<&'a str> {
        match self.lines.next() {
            Some((i, l)) => {
                self.line = i + 1;
                Ok(l)
            }
            None => Err(self.error("unexpected end of file")),
        }
    }

    pub fn peek_key(&self) -> Option<&'a str> {
        self.lines
            .clone()
            .next()
            .map(|(_, l)| l.split_once(' ').map_or(l, |(k, _)| k))
    }

    /// Reads a line that must start with `key` and returns the rest.
    pub fn value(&mut self, key: &str) -> Result<&'a str> {
        let l = self.next_line()?;
        match l.split_once(' ') {
            Some((k, v)) if k == key => Ok(v),
            _ if l == key => Ok(""),
            _ => Err(self.error(format!("expected `{key}`, found {l:?}"))),
        }
    }

    pub fn parsed<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let v = self.value(key)?;
        v.trim()
            .parse()
            .map_err(|_| self.error(format!("invalid value {v:?} for `{key}`")))
    }

    pub fn floats(&self, s: &str) -> Result<Vec<f64>> {
        s.split_whitespace()
            .map(|t| parse_f64(self.path, self.line, t))
            .collect()
    }

    pub fn error(&self, message: impl Into<String>) -> Error {
        Error::parse(self.path, self.line, message)
    }

    pub fn expect_end(&mut self) -> Result<()> {
        for (i, l) in self.lines.by_ref() {
            if !l.trim().is_empty() {
                self.line = i + 1;
                return Err(self.error(format!("trailing content {l:?}")));
            }
        }
        Ok(())
    }
}
