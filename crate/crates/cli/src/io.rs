// SPDX-License-Identifier: Apache-2.0

//! File access, error classification and output formatting.

use aaipc::circuit::{parse_circuit, Assignment, Evidence};
use aaipc::{Circuit, CircuitError, Error};
use std::fmt;
use std::path::{Path, PathBuf};

/// Exit status 1 for domain violations, 2 for I/O and parse failures.
#[derive(Debug)]
pub enum CliError {
    Domain(String),
    Io(String),
    Parse(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Io(_) | CliError::Parse(_) => 2,
        }
    }

    pub fn parse(msg: impl Into<String>) -> Self {
        CliError::Parse(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        CliError::Domain(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Domain(m) => write!(f, "{m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
            CliError::Parse(m) => write!(f, "parse error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<CircuitError> for CliError {
    fn from(e: CircuitError) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<aaipc::FloatError> for CliError {
    fn from(e: aaipc::FloatError) -> Self {
        CliError::Domain(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// A malformed document is a parse failure; a well-formed document that
/// breaks a structural rule is a domain violation.
pub fn read_circuit(path: &Path) -> Result<Circuit> {
    let text = read_text(path)?;
    parse_circuit(&text).map_err(|e| match e {
        CircuitError::Malformed(m) => CliError::parse(format!("{}: {m}", path.display())),
        other => CliError::domain(format!("{}: {other}", path.display())),
    })
}

/// CSV with a header row of variable ids, one row per instance and `-1` for
/// an unobserved variable. Lines starting with `#` are skipped.
pub fn read_evidence(path: &Path, n_vars: usize) -> Result<Vec<Evidence>> {
    let ctx = |line: Option<u64>, msg: String| {
        CliError::parse(match line {
            Some(l) => format!("{}:{l}: {msg}", path.display()),
            None => format!("{}: {msg}", path.display()),
        })
    };
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let header = rdr
        .headers()
        .map_err(|e| ctx(e.position().map(|p| p.line()), e.to_string()))?
        .clone();
    let mut column_of = vec![None; n_vars];
    for (col, name) in header.iter().enumerate() {
        let id: usize = name
            .parse()
            .map_err(|_| ctx(Some(1), format!("header `{name}` is not a variable id")))?;
        match column_of.get_mut(id) {
            Some(slot @ None) => *slot = Some(col),
            Some(Some(_)) => return Err(ctx(Some(1), format!("variable {id} appears twice"))),
            None => {
                return Err(ctx(
                    Some(1),
                    format!("variable {id} does not exist (circuit has {n_vars})"),
                ))
            }
        }
    }
    let column_of: Vec<usize> = column_of
        .iter()
        .enumerate()
        .map(|(var, c)| c.ok_or_else(|| ctx(Some(1), format!("no column for variable {var}"))))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| ctx(e.position().map(|p| p.line()), e.to_string()))?;
        let line = rec.position().map(|p| p.line());
        let row = column_of
            .iter()
            .map(|&col| {
                let field = &rec[col];
                match field.parse::<i64>() {
                    Ok(-1) => Ok(None),
                    Ok(v) if v >= 0 => Ok(Some(v as usize)),
                    _ => Err(ctx(line, format!("bad state `{field}`"))),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(ctx(None, "no data rows".into()));
    }
    Ok(rows)
}

pub fn complete_rows(data: &[Evidence]) -> Vec<Assignment> {
    data.iter()
        .filter_map(|row| row.iter().copied().collect::<Option<Vec<_>>>())
        .collect()
}

/// Key/value pairs written as a `#` comment line above CSV output and as the
/// `config` object of JSON output.
#[derive(Clone, Debug, Default)]
pub struct Header {
    pub command: &'static str,
    pub fields: Vec<(&'static str, String)>,
}

impl Header {
    pub fn new(command: &'static str) -> Self {
        Header {
            command,
            fields: Vec::new(),
        }
    }

    pub fn set(&mut self, key: &'static str, value: impl fmt::Display) -> &mut Self {
        self.fields.push((key, value.to_string()));
        self
    }

    pub fn comment(&self) -> String {
        let mut s = format!("# aaipc {}", self.command);
        for (k, v) in &self.fields {
            s.push_str(&format!(" {k}={v}"));
        }
        s.push('\n');
        s
    }

    pub fn json(&self) -> serde_json::Value {
        let mut m = serde_json::Map::new();
        m.insert("command".into(), self.command.into());
        for (k, v) in &self.fields {
            m.insert((*k).into(), v.clone().into());
        }
        serde_json::Value::Object(m)
    }
}

/// Header comment, then the CSV rows.
pub fn csv_text(header: &Header, columns: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(columns).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input");
    header.comment() + &body
}

/// Adds the header as `config` to a JSON object.
pub fn json_text(header: &Header, mut value: serde_json::Value) -> String {
    if let serde_json::Value::Object(m) = &mut value {
        m.insert("config".into(), header.json());
    }
    serde_json::to_string_pretty(&value).expect("values always serialize") + "\n"
}

pub fn emit(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => {
            std::fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))
        }
        None => {
            use std::io::Write;
            match std::io::stdout().lock().write_all(text.as_bytes()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                    Err(CliError::Io(format!("stdout: {e}")))
                }
                _ => Ok(()),
            }
        }
    }
}

/// Shortest round-trip decimal; `inf`, `-inf` and `NaN` as written by Rust.
pub fn num(x: f64) -> String {
    format!("{x}")
}
