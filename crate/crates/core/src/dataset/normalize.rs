use std::collections::BTreeSet;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{ColumnKind, DatasetError, EncodedMatrix, FeatureSchema, RawTable, RawValue, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FeatureNorm {
    Continuous { column: String, min: f64, max: f64 },
    Categorical { column: String, vocabulary: Vec<String> },
}

impl FeatureNorm {
    pub fn column(&self) -> &str {
        match self {
            FeatureNorm::Continuous { column, .. } | FeatureNorm::Categorical { column, .. } => {
                column
            }
        }
    }

    /// Number of encoded dimensions this feature expands to.
    pub fn width(&self) -> usize {
        match self {
            FeatureNorm::Continuous { .. } => 1,
            FeatureNorm::Categorical { vocabulary, .. } => vocabulary.len(),
        }
    }
}

/// Per-feature scaling fitted on the training split only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub dataset_id: String,
    pub features: Vec<FeatureNorm>,
}

impl NormalizationParams {
    pub fn encoded_width(&self) -> usize {
        self.features.iter().map(FeatureNorm::width).sum()
    }

    pub fn feature_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.encoded_width());
        for f in &self.features {
            match f {
                FeatureNorm::Continuous { column, .. } => names.push(column.clone()),
                FeatureNorm::Categorical { column, vocabulary } => {
                    names.extend(vocabulary.iter().map(|v| format!("{column}={v}")))
                }
            }
        }
        names
    }

    fn check_schema(&self, schema: &FeatureSchema) -> Result<()> {
        if self.dataset_id != schema.dataset_id {
            return Err(DatasetError::SchemaMismatch(format!(
                "normalizer fitted for `{}`, schema is `{}`",
                self.dataset_id, schema.dataset_id
            )));
        }
        let cols: Vec<_> = schema.feature_columns().collect();
        if cols.len() != self.features.len() {
            return Err(DatasetError::SchemaMismatch(format!(
                "normalizer has {} features, schema encodes {}",
                self.features.len(),
                cols.len()
            )));
        }
        for ((_, col), f) in cols.iter().zip(&self.features) {
            let kind_ok = matches!(
                (col.kind, f),
                (ColumnKind::Continuous, FeatureNorm::Continuous { .. })
                    | (ColumnKind::Categorical, FeatureNorm::Categorical { .. })
            );
            if col.name != f.column() || !kind_ok {
                return Err(DatasetError::SchemaMismatch(format!(
                    "column `{}` does not match fitted feature `{}`",
                    col.name,
                    f.column()
                )));
            }
        }
        Ok(())
    }
}

pub fn fit_normalizer(train: &RawTable) -> Result<NormalizationParams> {
    if train.is_empty() {
        return Err(DatasetError::EmptyTable);
    }
    let mut features = Vec::new();
    for (idx, col) in train.schema.feature_columns() {
        let norm = match col.kind {
            ColumnKind::Continuous => {
                let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
                for row in &train.rows {
                    if let RawValue::Number(v) = row[idx] {
                        min = min.min(v);
                        max = max.max(v);
                    }
                }
                FeatureNorm::Continuous {
                    column: col.name.clone(),
                    min,
                    max,
                }
            }
            ColumnKind::Categorical => {
                let vocab: BTreeSet<&str> = train
                    .rows
                    .iter()
                    .filter_map(|r| r[idx].as_text())
                    .collect();
                FeatureNorm::Categorical {
                    column: col.name.clone(),
                    vocabulary: vocab.into_iter().map(str::to_string).collect(),
                }
            }
            ColumnKind::Label | ColumnKind::Ignored => unreachable!("filtered by feature_columns"),
        };
        features.push(norm);
    }
    Ok(NormalizationParams {
        dataset_id: train.schema.dataset_id.clone(),
        features,
    })
}

/// Min-max scales continuous values into `[0, 1]` (clipping anything outside
/// the fitted range; constant columns map to 0) and one-hot encodes
/// categoricals over the fitted vocabulary (unseen values give an all-zero
/// group). Rows keep file order, which is treated as pseudo-time.
pub fn encode(
    table: &RawTable,
    params: &NormalizationParams,
    schema: &FeatureSchema,
) -> Result<EncodedMatrix> {
    if table.schema.as_ref() != schema {
        return Err(DatasetError::SchemaMismatch(format!(
            "table was loaded with schema `{}`, encoding with `{}`",
            table.schema.dataset_id, schema.dataset_id
        )));
    }
    params.check_schema(schema)?;

    let width = params.encoded_width();
    let mut values = Array2::<f64>::zeros((table.len(), width));
    let cols: Vec<usize> = schema.feature_columns().map(|(i, _)| i).collect();
    for (r, row) in table.rows.iter().enumerate() {
        let mut offset = 0;
        for (&ci, f) in cols.iter().zip(&params.features) {
            match f {
                FeatureNorm::Continuous { min, max, column } => {
                    let v = match row[ci] {
                        RawValue::Number(v) => v,
                        RawValue::Text(_) => {
                            return Err(DatasetError::SchemaMismatch(format!(
                                "column `{column}` holds text"
                            )))
                        }
                    };
                    values[[r, offset]] = scale(v, *min, *max);
                }
                FeatureNorm::Categorical { vocabulary, .. } => {
                    let text = match &row[ci] {
                        RawValue::Text(s) => s.clone(),
                        RawValue::Number(v) => v.to_string(),
                    };
                    if let Ok(k) = vocabulary.binary_search(&text) {
                        values[[r, offset + k]] = 1.0;
                    }
                }
            }
            offset += f.width();
        }
    }
    EncodedMatrix::new(values, table.labels(), params.feature_names(), true)
}

fn scale(v: f64, min: f64, max: f64) -> f64 {
    if max > min {
        ((v - min) / (max - min)).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::dataset::load_csv_reader;
    use proptest::prelude::*;

    fn schema() -> Arc<FeatureSchema> {
        Arc::new(
            FeatureSchema::parse(
                "@dataset=t\n@normal=normal\nbytes=continuous\nproto=categorical\nconst=continuous\nclass=label\n",
            )
            .unwrap(),
        )
    }

    fn table(csv: &str) -> RawTable {
        load_csv_reader(csv.as_bytes(), schema(), false).unwrap()
    }

    #[test]
    fn fits_extrema_and_sorted_vocabulary() {
        let t = table("0,tcp,7,normal\n5,udp,7,x\n10,tcp,7,normal\n3,icmp,7,x\n");
        let p = fit_normalizer(&t).unwrap();
        assert_eq!(
            p.features[0],
            FeatureNorm::Continuous {
                column: "bytes".into(),
                min: 0.0,
                max: 10.0
            }
        );
        assert_eq!(
            p.features[1],
            FeatureNorm::Categorical {
                column: "proto".into(),
                vocabulary: vec!["icmp".into(), "tcp".into(), "udp".into()]
            }
        );
        assert_eq!(
            p.features[2],
            FeatureNorm::Continuous {
                column: "const".into(),
                min: 7.0,
                max: 7.0
            }
        );
        assert_eq!(p.encoded_width(), 5);
    }

    #[test]
    fn min_max_with_clipping_and_constant_column() {
        let train = table("0,tcp,7,normal\n5,udp,7,x\n10,tcp,7,normal\n");
        let p = fit_normalizer(&train).unwrap();
        let enc = encode(&train, &p, &schema()).unwrap();
        assert_eq!(enc.values.column(0).to_vec(), vec![0.0, 0.5, 1.0]);
        assert!(enc.values.column(3).iter().all(|&v| v == 0.0));
        assert_eq!(enc.labels, vec![0, 1, 0]);

        let test = table("12,tcp,9,x\n-3,udp,1,x\n");
        let enc = encode(&test, &p, &schema()).unwrap();
        assert_eq!(enc.values[[0, 0]], 1.0);
        assert_eq!(enc.values[[1, 0]], 0.0);
    }

    #[test]
    fn unseen_category_is_all_zero() {
        let train = table("0,tcp,7,normal\n5,udp,7,x\n");
        let p = fit_normalizer(&train).unwrap();
        let test = table("1,icmp,7,normal\n");
        let enc = encode(&test, &p, &schema()).unwrap();
        assert_eq!(enc.values.row(0).to_vec()[1..3], [0.0, 0.0]);
        assert_eq!(enc.feature_names, vec!["bytes", "proto=tcp", "proto=udp", "const"]);
    }

    #[test]
    fn schema_mismatch() {
        let train = table("0,tcp,7,normal\n");
        let p = fit_normalizer(&train).unwrap();
        let other = FeatureSchema::parse("@dataset=u\n@normal=normal\nbytes=continuous\nproto=categorical\nconst=continuous\nclass=label\n").unwrap();
        assert!(matches!(
            encode(&train, &p, &other),
            Err(DatasetError::SchemaMismatch(_))
        ));
    }

    #[test]
    fn empty_table_rejected() {
        let t = RawTable {
            schema: schema(),
            rows: vec![],
        };
        assert!(matches!(fit_normalizer(&t), Err(DatasetError::EmptyTable)));
    }

    fn cell_rows() -> impl Strategy<Value = Vec<(f64, usize, f64)>> {
        proptest::collection::vec((-1e9f64..1e9, 0usize..4, -5.0f64..5.0), 1..30)
    }

    proptest! {
        // Fitting on one table and encoding another never escapes the box.
        #[test]
        fn encoded_values_stay_in_range(train in cell_rows(), test in cell_rows()) {
            let protos = ["tcp", "udp", "icmp", "sctp"];
            let render = |rows: &[(f64, usize, f64)]| {
                rows.iter()
                    .map(|(b, p, c)| format!("{b},{},{c},normal\n", protos[*p]))
                    .collect::<String>()
            };
            let train = table(&render(&train));
            let test = table(&render(&test));
            let p = fit_normalizer(&train).unwrap();
            for t in [&train, &test] {
                let enc = encode(t, &p, &schema()).unwrap();
                let proto_w = p.features[1].width();
                for row in enc.values.rows() {
                    prop_assert!((0.0..=1.0).contains(&row[0]));
                    prop_assert!((0.0..=1.0).contains(&row[proto_w + 1]));
                    let group: f64 = row.iter().skip(1).take(proto_w).sum();
                    prop_assert!(group == 0.0 || group == 1.0);
                }
            }
        }
    }
}
