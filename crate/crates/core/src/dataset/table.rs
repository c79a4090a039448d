use std::io::Read;
use std::path::Path;
use std::sync::Arc;

use super::{ColumnKind, DatasetError, FeatureSchema, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum RawValue {
    Number(f64),
    Text(String),
}

impl RawValue {
    pub fn as_text(&self) -> Option<&str> {
        match self {
            RawValue::Text(s) => Some(s),
            RawValue::Number(_) => None,
        }
    }
}

/// Validated but unencoded records. Continuous cells are already parsed.
#[derive(Debug, Clone)]
pub struct RawTable {
    pub schema: Arc<FeatureSchema>,
    pub rows: Vec<Vec<RawValue>>,
}

impl RawTable {
    pub fn new(schema: Arc<FeatureSchema>, rows: Vec<Vec<RawValue>>) -> Result<Self> {
        let width = schema.columns.len();
        if let Some(i) = rows.iter().position(|r| r.len() != width) {
            return Err(DatasetError::MissingColumn(format!(
                "row {} has {} cells, schema has {width} columns",
                i + 1,
                rows[i].len()
            )));
        }
        Ok(RawTable { schema, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Binary labels under the schema's label rule.
    pub fn labels(&self) -> Vec<u8> {
        let li = self.schema.label_index();
        let rule = &self.schema.positive_label_rule;
        self.rows
            .iter()
            .map(|r| match &r[li] {
                RawValue::Text(s) => rule.binarize(s),
                RawValue::Number(v) => rule.binarize(&v.to_string()),
            })
            .collect()
    }

    pub fn select(&self, indices: &[usize]) -> RawTable {
        RawTable {
            schema: Arc::clone(&self.schema),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }
}

pub fn load_csv(path: &Path, schema: Arc<FeatureSchema>, has_header: bool) -> Result<RawTable> {
    let file =
        std::fs::File::open(path).map_err(|e| DatasetError::io(path.display().to_string(), e))?;
    load_csv_reader(file, schema, has_header)
}

pub fn load_csv_reader<R: Read>(
    reader: R,
    schema: Arc<FeatureSchema>,
    has_header: bool,
) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let width = schema.columns.len();
    let mut records = rdr.records();

    if has_header {
        let header = match records.next() {
            Some(h) => h?,
            None => return Err(DatasetError::EmptyFile),
        };
        if header.len() != width {
            return Err(DatasetError::MissingColumn(format!(
                "header has {} fields, schema has {width} columns",
                header.len()
            )));
        }
        for (cell, col) in header.iter().zip(&schema.columns) {
            if !cell.eq_ignore_ascii_case(&col.name) {
                return Err(DatasetError::MissingColumn(format!(
                    "expected `{}` in header, found `{cell}`",
                    col.name
                )));
            }
        }
    }

    let mut rows = Vec::new();
    for (i, rec) in records.enumerate() {
        let rec = rec?;
        if rec.len() == 1 && rec.get(0) == Some("") {
            continue;
        }
        let row_no = i + 1 + usize::from(has_header);
        if rec.len() != width {
            return Err(DatasetError::MissingColumn(format!(
                "line {row_no} has {} cells, schema has {width} columns",
                rec.len()
            )));
        }
        let mut row = Vec::with_capacity(width);
        for (cell, col) in rec.iter().zip(&schema.columns) {
            row.push(match col.kind {
                ColumnKind::Continuous => {
                    let v: f64 = cell.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(
                        || DatasetError::NonNumericContinuous {
                            row: row_no,
                            column: col.name.clone(),
                            value: cell.to_string(),
                        },
                    )?;
                    RawValue::Number(v)
                }
                _ => RawValue::Text(cell.to_string()),
            });
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(DatasetError::EmptyFile);
    }
    Ok(RawTable { schema, rows })
}
