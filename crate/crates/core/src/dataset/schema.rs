use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DatasetError, Result};

const NSL_KDD: &str = include_str!("../../schemas/nsl_kdd.schema");
const UNSW_NB15: &str = include_str!("../../schemas/unsw_nb15.schema");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Continuous,
    Categorical,
    Label,
    /// Parsed for arity but never encoded (addresses, ports, leaky attack names).
    Ignored,
}

impl std::str::FromStr for ColumnKind {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "continuous" => Ok(ColumnKind::Continuous),
            "categorical" => Ok(ColumnKind::Categorical),
            "label" => Ok(ColumnKind::Label),
            "ignored" => Ok(ColumnKind::Ignored),
            other => Err(DatasetError::InvalidSchema(format!(
                "unknown column kind `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
}

/// Maps raw label cells to attack (1) / normal (0). Any value not listed as
/// normal counts as an attack, so multi-class labels collapse to binary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRule {
    pub normal_values: Vec<String>,
}

impl LabelRule {
    pub fn binarize(&self, raw: &str) -> u8 {
        let raw = raw.trim();
        let normal = self
            .normal_values
            .iter()
            .any(|n| n.eq_ignore_ascii_case(raw));
        u8::from(!normal)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub dataset_id: String,
    pub columns: Vec<Column>,
    pub positive_label_rule: LabelRule,
}

impl FeatureSchema {
    pub fn new(dataset_id: &str, columns: Vec<Column>, rule: LabelRule) -> Result<Self> {
        let schema = FeatureSchema {
            dataset_id: dataset_id.to_string(),
            columns,
            positive_label_rule: rule,
        };
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for c in &self.columns {
            if !seen.insert(c.name.as_str()) {
                return Err(DatasetError::InvalidSchema(format!(
                    "duplicate column `{}`",
                    c.name
                )));
            }
        }
        let labels = self
            .columns
            .iter()
            .filter(|c| c.kind == ColumnKind::Label)
            .count();
        if labels != 1 {
            return Err(DatasetError::InvalidSchema(format!(
                "expected exactly one label column, found {labels}"
            )));
        }
        if self.columns.len() < 2 {
            return Err(DatasetError::InvalidSchema(
                "schema needs at least one non-label column".into(),
            ));
        }
        if self.positive_label_rule.normal_values.is_empty() {
            return Err(DatasetError::InvalidSchema(
                "label rule lists no normal values".into(),
            ));
        }
        Ok(())
    }

    /// Parses the line-oriented schema format:
    ///
    /// ```text
    /// @dataset = nsl_kdd
    /// @normal = normal
    /// duration = continuous
    /// protocol_type = categorical
    /// class = label
    /// ```
    pub fn parse(text: &str) -> Result<Self> {
        let mut dataset_id = None;
        let mut normal = Vec::new();
        let mut columns = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                DatasetError::InvalidSchema(format!("line {}: expected key = value", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "@dataset" => dataset_id = Some(value.to_string()),
                "@normal" => normal.extend(
                    value
                        .split(',')
                        .map(|v| v.trim().to_string())
                        .filter(|v| !v.is_empty()),
                ),
                k if k.starts_with('@') => {
                    return Err(DatasetError::InvalidSchema(format!(
                        "line {}: unknown directive `{k}`",
                        lineno + 1
                    )))
                }
                name => columns.push(Column {
                    name: name.to_string(),
                    kind: value.parse()?,
                }),
            }
        }
        let dataset_id = dataset_id
            .ok_or_else(|| DatasetError::InvalidSchema("missing @dataset directive".into()))?;
        FeatureSchema::new(
            &dataset_id,
            columns,
            LabelRule {
                normal_values: normal,
            },
        )
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| DatasetError::io(path.display().to_string(), e))?;
        Self::parse(&text)
    }

    /// Built-in schemas: `nsl_kdd` and `unsw_nb15`.
    pub fn builtin(id: &str) -> Option<Self> {
        let text = match id {
            "nsl_kdd" => NSL_KDD,
            "unsw_nb15" => UNSW_NB15,
            _ => return None,
        };
        Some(Self::parse(text).expect("bundled schema is valid"))
    }

    pub fn label_index(&self) -> usize {
        self.columns
            .iter()
            .position(|c| c.kind == ColumnKind::Label)
            .expect("validated schema has a label column")
    }

    /// Columns that are neither the label nor ignored.
    pub fn feature_columns(&self) -> impl Iterator<Item = (usize, &Column)> {
        self.columns
            .iter()
            .enumerate()
            .filter(|(_, c)| matches!(c.kind, ColumnKind::Continuous | ColumnKind::Categorical))
    }

    /// Non-label column count, ignored columns included.
    pub fn non_label_count(&self) -> usize {
        self.columns.len() - 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_column_counts() {
        let kdd = FeatureSchema::builtin("nsl_kdd").unwrap();
        assert_eq!(kdd.columns.len(), 42);
        assert_eq!(kdd.non_label_count(), 41);
        let unsw = FeatureSchema::builtin("unsw_nb15").unwrap();
        assert_eq!(unsw.columns.len(), 49);
        assert!(FeatureSchema::builtin("cicids").is_none());
    }

    #[test]
    fn rejects_duplicate_and_missing_label() {
        let dup = "@dataset=x\n@normal=0\na=continuous\na=continuous\ny=label\n";
        assert!(matches!(
            FeatureSchema::parse(dup),
            Err(DatasetError::InvalidSchema(_))
        ));
        let nolabel = "@dataset=x\n@normal=0\na=continuous\n";
        assert!(FeatureSchema::parse(nolabel).is_err());
        let only_label = "@dataset=x\n@normal=0\ny=label\n";
        assert!(FeatureSchema::parse(only_label).is_err());
    }

    #[test]
    fn label_rule_collapses_attack_families() {
        let rule = LabelRule {
            normal_values: vec!["normal".into()],
        };
        assert_eq!(rule.binarize("normal"), 0);
        assert_eq!(rule.binarize(" Normal "), 0);
        assert_eq!(rule.binarize("neptune"), 1);
        assert_eq!(rule.binarize("guess_passwd"), 1);
    }
}
