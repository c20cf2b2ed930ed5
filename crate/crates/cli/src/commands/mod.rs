pub mod adversarial;
pub mod direction;
pub mod meta_eval;
pub mod position;
pub mod score;
pub mod train;
pub mod weights;

use std::collections::BTreeMap;
use std::path::Path;

use maskscore::dataset::{self, Dataset, DatasetKind, EvalRecord, PairRecord};
use serde_json::{json, Value};

use crate::exit;

pub const SCHEMA_VERSION: u32 = 1;

/// A report body with the schema version and resolved configuration.
pub fn report(config: Value, body: Value) -> Value {
    let mut map = match body {
        Value::Object(m) => m,
        other => {
            let mut m = serde_json::Map::new();
            m.insert("report".into(), other);
            m
        }
    };
    map.insert("schema_version".into(), json!(SCHEMA_VERSION));
    map.insert("config".into(), config);
    Value::Object(map)
}

pub fn load_segments(path: &Path) -> anyhow::Result<Vec<EvalRecord>> {
    let records = dataset::load_segments(path)?;
    if records.is_empty() {
        return Err(exit::data(format!("{}: dataset is empty", path.display())));
    }
    Ok(records)
}

pub fn load_pairs(path: &Path) -> anyhow::Result<Vec<PairRecord>> {
    let records = match dataset::load_dataset(path, DatasetKind::Pairwise)? {
        Dataset::Pairwise(r) => r,
        Dataset::Segment(_) => unreachable!(),
    };
    if records.is_empty() {
        return Err(exit::data(format!("{}: dataset is empty", path.display())));
    }
    Ok(records)
}

pub fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    Ok(dataset::write_atomic(path, text.as_bytes())?)
}

pub fn float_cell(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

pub fn human_dims(records: &[EvalRecord]) -> BTreeMap<String, usize> {
    let mut dims = BTreeMap::new();
    for r in records {
        for k in r.human.keys() {
            *dims.entry(k.clone()).or_insert(0) += 1;
        }
    }
    dims
}
