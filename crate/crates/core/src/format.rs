//! Versioned on-disk formats shared by the data files, datasets and reports.
//!
//! Columnar text tables look like
//!
//! ```text
//! # comment
//! format <name> <major>.<minor>
//! col_a col_b col_c
//! v v v
//! ```
//!
//! Blank lines and lines starting with `#` are ignored anywhere.

use crate::error::{Error, Result};

/// A `major.minor` format version.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Version {
    pub major: u32,
    pub minor: u32,
}

impl Version {
    pub const fn new(major: u32, minor: u32) -> Self {
        Version { major, minor }
    }

    pub fn parse(s: &str) -> Option<Version> {
        let (a, b) = s.split_once('.')?;
        Some(Version {
            major: a.parse().ok()?,
            minor: b.parse().ok()?,
        })
    }

    /// Rejects versions whose major number differs from `self`.
    pub fn check_compatible(self, format: &str, found: &str) -> Result<()> {
        match Version::parse(found) {
            Some(v) if v.major == self.major => Ok(()),
            _ => Err(Error::UnsupportedVersion {
                format: format.to_string(),
                found: found.to_string(),
                supported: self.major,
            }),
        }
    }
}

impl std::fmt::Display for Version {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}.{}", self.major, self.minor)
    }
}

#[derive(Clone, Debug)]
pub struct Row {
    pub line: usize,
    pub fields: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct ColumnarTable {
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
}

impl ColumnarTable {
    /// Parses a table of format `name`, checking version compatibility and
    /// that the header matches `columns` exactly.
    pub fn parse(text: &str, source: &str, name: &str, version: Version, columns: &[&str]) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let (ln, first) = lines
            .next()
            .ok_or_else(|| Error::parse(source, None, "empty file"))?;
        let parts: Vec<&str> = first.split_whitespace().collect();
        if parts.len() != 3 || parts[0] != "format" {
            return Err(Error::parse(source, Some(ln), format!("expected `format {name} <version>`")));
        }
        if parts[1] != name {
            return Err(Error::parse(
                source,
                Some(ln),
                format!("expected format `{name}`, found `{}`", parts[1]),
            ));
        }
        version.check_compatible(name, parts[2])?;

        let (ln, header) = lines
            .next()
            .ok_or_else(|| Error::parse(source, None, "missing column header"))?;
        let found: Vec<String> = header.split_whitespace().map(str::to_string).collect();
        if found != columns {
            return Err(Error::parse(
                source,
                Some(ln),
                format!("expected columns `{}`, found `{}`", columns.join(" "), found.join(" ")),
            ));
        }

        let mut rows = Vec::new();
        for (ln, l) in lines {
            let fields: Vec<String> = l.split_whitespace().map(str::to_string).collect();
            if fields.len() != columns.len() {
                return Err(Error::parse(
                    source,
                    Some(ln),
                    format!("expected {} fields, found {}", columns.len(), fields.len()),
                ));
            }
            rows.push(Row { line: ln, fields });
        }
        Ok(ColumnarTable { columns: found, rows })
    }
}

impl Row {
    pub fn get<T: std::str::FromStr>(&self, source: &str, idx: usize, column: &str) -> Result<T> {
        self.fields[idx]
            .parse()
            .map_err(|_| Error::parse(source, Some(self.line), format!("bad value `{}` in column `{column}`", self.fields[idx])))
    }
}
