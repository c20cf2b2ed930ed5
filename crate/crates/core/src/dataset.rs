//! JSON-lines corpora, score dumps and report files.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::estimator::ScoreReport;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("line {line}: {reason}")]
    ParseError { line: usize, reason: String },
    #[error("duplicate id {id:?} on lines {first} and {second}")]
    DuplicateId { id: String, first: usize, second: usize },
    #[error("{0} records but {1} reports")]
    LengthMismatch(usize, usize),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    Segment,
    Pairwise,
}

/// One scored segment. Unknown keys land in `extras`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub id: String,
    pub source: String,
    pub candidate: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub human: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<String>,
    #[serde(flatten)]
    pub extras: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub id: String,
    pub source: String,
    pub better: String,
    pub worse: String,
    #[serde(flatten)]
    pub extras: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    Segment(Vec<EvalRecord>),
    Pairwise(Vec<PairRecord>),
}

impl Dataset {
    pub fn len(&self) -> usize {
        match self {
            Dataset::Segment(r) => r.len(),
            Dataset::Pairwise(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

trait Keyed {
    fn key(&self) -> &str;
    fn check(&self) -> Result<(), String> {
        Ok(())
    }
}

impl Keyed for EvalRecord {
    fn key(&self) -> &str {
        &self.id
    }
}

impl Keyed for PairRecord {
    fn key(&self) -> &str {
        &self.id
    }
    fn check(&self) -> Result<(), String> {
        if self.better == self.worse {
            return Err("better and worse are identical".into());
        }
        Ok(())
    }
}

/// Reads JSON-lines from `reader`, one value per nonblank line.
pub fn read_jsonl<T: DeserializeOwned, R: BufRead>(reader: R) -> Result<Vec<(usize, T)>, DatasetError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| DatasetError::ParseError { line: line_no, reason: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line)
            .map_err(|e| DatasetError::ParseError { line: line_no, reason: strip_position(&e.to_string()) })?;
        out.push((line_no, value));
    }
    Ok(out)
}

fn strip_position(msg: &str) -> String {
    match msg.find(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

fn read_records<T: DeserializeOwned + Keyed, R: BufRead>(reader: R) -> Result<Vec<T>, DatasetError> {
    let rows: Vec<(usize, T)> = read_jsonl(reader)?;
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut out = Vec::with_capacity(rows.len());
    for (line, rec) in rows {
        rec.check().map_err(|reason| DatasetError::ParseError { line, reason })?;
        if let Some(&first) = seen.get(rec.key()) {
            return Err(DatasetError::DuplicateId { id: rec.key().to_string(), first, second: line });
        }
        seen.insert(rec.key().to_string(), line);
        out.push(rec);
    }
    Ok(out)
}

pub fn read_dataset<R: BufRead>(reader: R, kind: DatasetKind) -> Result<Dataset, DatasetError> {
    Ok(match kind {
        DatasetKind::Segment => Dataset::Segment(read_records(reader)?),
        DatasetKind::Pairwise => Dataset::Pairwise(read_records(reader)?),
    })
}

pub fn load_dataset(path: impl AsRef<Path>, kind: DatasetKind) -> Result<Dataset, DatasetError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(io_err(path))?;
    read_dataset(BufReader::new(file), kind)
}

pub fn load_segments(path: impl AsRef<Path>) -> Result<Vec<EvalRecord>, DatasetError> {
    match load_dataset(path, DatasetKind::Segment)? {
        Dataset::Segment(r) => Ok(r),
        Dataset::Pairwise(_) => unreachable!(),
    }
}

pub fn load_pairs(path: impl AsRef<Path>) -> Result<Vec<PairRecord>, DatasetError> {
    match load_dataset(path, DatasetKind::Pairwise)? {
        Dataset::Pairwise(r) => Ok(r),
        Dataset::Segment(_) => unreachable!(),
    }
}

/// One line of a score dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    /// Keyed by the timestep in shortest decimal form.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub per_timestep: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub config: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(flatten)]
    pub extras: BTreeMap<String, Value>,
}

pub fn timestep_key(t: f64) -> String {
    serde_json::Number::from_f64(t).map(|n| n.to_string()).unwrap_or_else(|| t.to_string())
}

impl ScoreRow {
    pub fn from_report(id: impl Into<String>, report: &ScoreReport) -> Self {
        Self {
            id: id.into(),
            score: Some(report.score),
            per_timestep: report.per_timestep.iter().map(|p| (timestep_key(p.t), p.value)).collect(),
            config: serde_json::to_value(&report.config).expect("config serializes"),
            error: None,
            extras: BTreeMap::new(),
        }
    }

    pub fn failed(id: impl Into<String>, error: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            score: None,
            per_timestep: BTreeMap::new(),
            config: Value::Null,
            error: Some(error.into()),
            extras: BTreeMap::new(),
        }
    }
}

/// Rebuilds every object with lexicographically ordered keys.
pub fn sort_keys(value: Value) -> Value {
    match value {
        Value::Object(map) => {
            let mut entries: Vec<(String, Value)> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            Value::Object(entries.into_iter().map(|(k, v)| (k, sort_keys(v))).collect::<Map<_, _>>())
        }
        Value::Array(items) => Value::Array(items.into_iter().map(sort_keys).collect()),
        other => other,
    }
}

/// Canonical single-line JSON: sorted keys, shortest round-trip floats.
pub fn to_canonical_line<T: Serialize>(value: &T) -> String {
    let v = sort_keys(serde_json::to_value(value).expect("value serializes"));
    serde_json::to_string(&v).expect("value serializes")
}

/// Writes to a sibling temporary file and renames it into place, so an
/// interrupted write never leaves a partial file at `path`.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<(), DatasetError> {
    let path = path.as_ref();
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    {
        let mut w = BufWriter::new(File::create(&tmp).map_err(io_err(&tmp))?);
        w.write_all(bytes).map_err(io_err(&tmp))?;
        w.flush().map_err(io_err(&tmp))?;
    }
    fs::rename(&tmp, path).map_err(io_err(path))
}

pub fn jsonl_bytes<T: Serialize>(rows: &[T]) -> Vec<u8> {
    let mut out = Vec::new();
    for row in rows {
        out.extend_from_slice(to_canonical_line(row).as_bytes());
        out.push(b'\n');
    }
    out
}

pub fn write_jsonl<T: Serialize>(rows: &[T], path: impl AsRef<Path>) -> Result<(), DatasetError> {
    write_atomic(path, &jsonl_bytes(rows))
}

/// Pretty-printed canonical JSON with a trailing newline.
pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<(), DatasetError> {
    let v = sort_keys(serde_json::to_value(value).expect("value serializes"));
    let mut s = serde_json::to_string_pretty(&v).expect("value serializes");
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

pub fn write_scores(
    records: &[EvalRecord],
    reports: &[ScoreReport],
    path: impl AsRef<Path>,
) -> Result<(), DatasetError> {
    if records.len() != reports.len() {
        return Err(DatasetError::LengthMismatch(records.len(), reports.len()));
    }
    let rows: Vec<ScoreRow> = records.iter().zip(reports).map(|(r, rep)| ScoreRow::from_report(&r.id, rep)).collect();
    write_jsonl(&rows, path)
}

pub fn load_scores(path: impl AsRef<Path>) -> Result<Vec<ScoreRow>, DatasetError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(io_err(path))?;
    read_records(BufReader::new(file))
}

impl Keyed for ScoreRow {
    fn key(&self) -> &str {
        &self.id
    }
}
