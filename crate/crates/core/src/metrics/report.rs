use serde::{Deserialize, Serialize};

use super::Scores;

pub const TABLE_COLUMNS: [&str; 7] = [
    "Method",
    "Accuracy (%)",
    "Precision (%)",
    "Recall (%)",
    "F1-score (%)",
    "FPR (%)",
    "Training Time (s)",
];

/// Published figures for the hybrid method on NSL-KDD in table column order
/// (accuracy, precision, recall, F1, FPR in percent; training seconds). Kept
/// for side-by-side display only.
pub const PUBLISHED_NSL_KDD: [f64; 6] = [96.7, 96.2, 95.9, 96.0, 3.2, 580.0];

/// One evaluated run. Training time is recorded in two parts because the
/// self-supervised pretraining and the subset search run separately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: String,
    pub scores: Scores,
    pub pretrain_seconds: f64,
    pub search_seconds: f64,
}

impl RunRecord {
    pub fn training_seconds(&self) -> f64 {
        self.pretrain_seconds + self.search_seconds
    }

    fn cells(&self) -> Vec<String> {
        let pct = |v: Option<f64>| match v {
            Some(v) => format!("{:.1}", v * 100.0),
            None => "undefined".to_string(),
        };
        let s = &self.scores;
        vec![
            self.method.clone(),
            pct(s.accuracy),
            pct(s.precision),
            pct(s.recall),
            pct(s.f1),
            pct(s.fpr),
            format!("{:.1}", self.training_seconds()),
        ]
    }
}

/// Aligned plain-text table: one header line, one line per run.
pub fn render_table(records: &[RunRecord]) -> String {
    let rows: Vec<Vec<String>> = records.iter().map(RunRecord::cells).collect();
    let mut widths: Vec<usize> = TABLE_COLUMNS.iter().map(|c| c.len()).collect();
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: Vec<&str>| {
        cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| {
                if i == 0 {
                    format!("{c:<w$}")
                } else {
                    format!("{c:>w$}")
                }
            })
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = line(TABLE_COLUMNS.to_vec());
    out.push('\n');
    for row in &rows {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{confusion, scores};

    fn record() -> RunRecord {
        RunRecord {
            method: "qids".into(),
            scores: scores(&confusion(&[0, 0, 1, 1], &[0, 1, 1, 1]).unwrap()),
            pretrain_seconds: 1.25,
            search_seconds: 2.0,
        }
    }

    #[test]
    fn single_run_table() {
        let t = render_table(&[record()]);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 2);
        let header: Vec<&str> = lines[0].split("  ").map(str::trim).filter(|s| !s.is_empty()).collect();
        assert_eq!(header, TABLE_COLUMNS);
        assert!(lines[1].contains("75.0"));
        assert!(lines[1].contains("66.7"));
        assert!(lines[1].contains("3.2"));
    }

    #[test]
    fn undefined_sentinel_rendered() {
        let mut r = record();
        r.scores.precision = None;
        assert!(render_table(&[r]).contains("undefined"));
    }

    #[test]
    fn json_round_trip() {
        let r = vec![record()];
        let text = serde_json::to_string(&r).unwrap();
        let back: Vec<RunRecord> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
    }
}
