use std::io::{BufRead, BufReader, Read, Write};

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use super::{DatasetError, Result};
use crate::FORMAT_VERSION;

/// Encoded feature matrix with binary labels (attack = 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedMatrix {
    pub values: Array2<f64>,
    pub labels: Vec<u8>,
    pub feature_names: Vec<String>,
    /// Rows are in (pseudo-)time order, so contiguous windows are meaningful.
    pub row_order_is_temporal: bool,
}

impl EncodedMatrix {
    pub fn new(
        values: Array2<f64>,
        labels: Vec<u8>,
        feature_names: Vec<String>,
        row_order_is_temporal: bool,
    ) -> Result<Self> {
        if values.nrows() != labels.len() {
            return Err(DatasetError::InvalidDimensions(format!(
                "{} rows but {} labels",
                values.nrows(),
                labels.len()
            )));
        }
        if values.ncols() != feature_names.len() {
            return Err(DatasetError::InvalidDimensions(format!(
                "{} columns but {} feature names",
                values.ncols(),
                feature_names.len()
            )));
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(DatasetError::InvalidDimensions(
                "labels must be 0 or 1".into(),
            ));
        }
        Ok(EncodedMatrix {
            values,
            labels,
            feature_names,
            row_order_is_temporal,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn select_rows(&self, indices: &[usize]) -> EncodedMatrix {
        EncodedMatrix {
            values: self.values.select(Axis(0), indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
            row_order_is_temporal: self.row_order_is_temporal,
        }
    }

    /// Row-wise concatenation; both halves must share feature names.
    pub fn concat(&self, other: &EncodedMatrix) -> Result<EncodedMatrix> {
        if self.feature_names != other.feature_names {
            return Err(DatasetError::SchemaMismatch(
                "cannot stack matrices with different features".into(),
            ));
        }
        let values = ndarray::concatenate(Axis(0), &[self.values.view(), other.values.view()])
            .expect("column counts already match");
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        Ok(EncodedMatrix {
            values,
            labels,
            feature_names: self.feature_names.clone(),
            row_order_is_temporal: self.row_order_is_temporal && other.row_order_is_temporal,
        })
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let pos = self.labels.iter().filter(|&&l| l == 1).count();
        [self.labels.len() - pos, pos]
    }
}

/// Writes the matrix as CSV: a version comment line, a header of feature
/// names plus `label`, then one row per record. Floats use the shortest
/// representation that parses back to the same bits.
pub fn write_matrix<W: Write>(m: &EncodedMatrix, mut out: W) -> Result<()> {
    writeln!(
        out,
        "# qids-matrix version={} temporal={}",
        FORMAT_VERSION, m.row_order_is_temporal
    )
    .map_err(|e| DatasetError::io("<matrix>", e))?;
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = m.feature_names.iter().map(String::as_str).collect();
    header.push("label");
    w.write_record(&header)?;
    let mut buf = Vec::with_capacity(m.n_cols() + 1);
    for (row, label) in m.values.rows().into_iter().zip(&m.labels) {
        buf.clear();
        buf.extend(row.iter().map(|v| v.to_string()));
        buf.push(label.to_string());
        w.write_record(&buf)?;
    }
    w.flush().map_err(|e| DatasetError::io("<matrix>", e))?;
    Ok(())
}

pub fn read_matrix<R: Read>(input: R) -> Result<EncodedMatrix> {
    let mut reader = BufReader::new(input);
    let mut first = String::new();
    reader
        .read_line(&mut first)
        .map_err(|e| DatasetError::io("<matrix>", e))?;
    let first = first.trim();
    let rest = first
        .strip_prefix("# qids-matrix")
        .ok_or_else(|| DatasetError::Malformed("missing qids-matrix preamble".into()))?;
    let mut version = None;
    let mut temporal = None;
    for kv in rest.split_whitespace() {
        match kv.split_once('=') {
            Some(("version", v)) => version = v.parse::<u32>().ok(),
            Some(("temporal", v)) => temporal = v.parse::<bool>().ok(),
            _ => {}
        }
    }
    let version = version.ok_or_else(|| DatasetError::Malformed("missing version".into()))?;
    if version != FORMAT_VERSION {
        return Err(DatasetError::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let temporal = temporal.ok_or_else(|| DatasetError::Malformed("missing temporal".into()))?;

    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.is_empty() || header.get(header.len() - 1) != Some("label") {
        return Err(DatasetError::Malformed("last header column must be `label`".into()));
    }
    let names: Vec<String> = header
        .iter()
        .take(header.len() - 1)
        .map(str::to_string)
        .collect();
    let d = names.len();
    let mut flat = Vec::new();
    let mut labels = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != d + 1 {
            return Err(DatasetError::Malformed(format!("row {} has wrong arity", i + 1)));
        }
        for cell in rec.iter().take(d) {
            flat.push(cell.parse::<f64>().map_err(|_| {
                DatasetError::Malformed(format!("row {}: bad value `{cell}`", i + 1))
            })?);
        }
        labels.push(match &rec[d] {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(DatasetError::Malformed(format!(
                    "row {}: bad label `{other}`",
                    i + 1
                )))
            }
        });
    }
    let values = Array2::from_shape_vec((labels.len(), d), flat)
        .map_err(|e| DatasetError::Malformed(e.to_string()))?;
    EncodedMatrix::new(values, labels, names, temporal)
}
