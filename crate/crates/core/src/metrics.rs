//! Confusion matrix and the per-class / averaged classification report.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::class::{ClassId, NUM_CLASSES};
use crate::error::{Error, Result};

/// Square count matrix; rows are true classes, columns predicted classes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        Self {
            classes,
            counts: vec![0; classes * classes],
        }
    }

    /// Builds an 8-class matrix from (true, predicted) pairs.
    pub fn accumulate(pairs: impl IntoIterator<Item = (ClassId, ClassId)>) -> Self {
        let mut m = Self::new(NUM_CLASSES);
        for (t, p) in pairs {
            m.counts[t.index() * NUM_CLASSES + p.index()] += 1;
        }
        m
    }

    /// Index-based variant for arbitrary class counts.
    pub fn from_indices(
        classes: usize,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut m = Self::new(classes);
        for (t, p) in pairs {
            m.add(t, p)?;
        }
        Ok(m)
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Input("confusion matrix must be square".into()));
        }
        Ok(Self {
            classes: n,
            counts: rows.concat(),
        })
    }

    pub fn add(&mut self, truth: usize, predicted: usize) -> Result<()> {
        if truth >= self.classes || predicted >= self.classes {
            return Err(Error::Domain(format!(
                "pair ({truth}, {predicted}) outside 0..{}",
                self.classes
            )));
        }
        self.counts[truth * self.classes + predicted] += 1;
        Ok(())
    }

    /// Elementwise sum, for merging shards.
    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.classes != self.classes {
            return Err(Error::Input(
                "cannot merge matrices of different size".into(),
            ));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.classes + predicted]
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.counts
            .chunks(self.classes.max(1))
            .map(<[u64]>::to_vec)
            .collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes).map(|k| self.get(k, k)).sum()
    }

    pub fn row_total(&self, k: usize) -> u64 {
        (0..self.classes).map(|j| self.get(k, j)).sum()
    }

    pub fn col_total(&self, k: usize) -> u64 {
        (0..self.classes).map(|i| self.get(i, k)).sum()
    }

    pub fn report(&self) -> Result<ClassificationReport> {
        report(self)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub name: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Number of samples whose true class is this one.
    pub support: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub classes: Vec<ClassMetrics>,
    pub accuracy: f64,
    pub micro: Prf,
    pub weighted: Prf,
    pub total: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

fn class_name(classes: usize, k: usize) -> String {
    if classes == NUM_CLASSES {
        ClassId::new(k).expect("k < 8").name().to_string()
    } else {
        format!("class {k}")
    }
}

/// Precision, recall, and F1 per class (0 when a denominator is empty),
/// accuracy, micro averages from pooled counts, and support-weighted averages.
pub fn report(m: &ConfusionMatrix) -> Result<ClassificationReport> {
    let total = m.total();
    if total == 0 {
        return Err(Error::Input(
            "cannot report on an empty confusion matrix".into(),
        ));
    }
    let n = m.classes();
    let classes: Vec<ClassMetrics> = (0..n)
        .map(|k| {
            let tp = m.get(k, k);
            let precision = ratio(tp, m.col_total(k));
            let recall = ratio(tp, m.row_total(k));
            ClassMetrics {
                name: class_name(n, k),
                precision,
                recall,
                f1: harmonic(precision, recall),
                support: m.row_total(k),
            }
        })
        .collect();

    let tp = m.trace();
    let fp: u64 = (0..n).map(|k| m.col_total(k) - m.get(k, k)).sum();
    let fn_: u64 = (0..n).map(|k| m.row_total(k) - m.get(k, k)).sum();
    let micro_p = ratio(tp, tp + fp);
    let micro_r = ratio(tp, tp + fn_);
    let micro = Prf {
        precision: micro_p,
        recall: micro_r,
        f1: harmonic(micro_p, micro_r),
    };

    let weight = |f: fn(&ClassMetrics) -> f64| -> f64 {
        classes.iter().map(|c| c.support as f64 * f(c)).sum::<f64>() / total as f64
    };
    let weighted = Prf {
        precision: weight(|c| c.precision),
        recall: weight(|c| c.recall),
        f1: weight(|c| c.f1),
    };

    Ok(ClassificationReport {
        classes,
        accuracy: ratio(tp, total),
        micro,
        weighted,
        total,
    })
}

/// Machine-readable report file contents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub report: ClassificationReport,
    pub confusion_matrix: Vec<Vec<u64>>,
}

impl ReportFile {
    pub fn new(report: ClassificationReport, matrix: &ConfusionMatrix) -> Self {
        Self {
            report,
            confusion_matrix: matrix.rows(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Text table: one row per class, then Accuracy, Micro Avg, Weighted Avg.
/// Cells show two decimals; the accuracy cell shows three.
pub fn render_report(report: &ClassificationReport) -> String {
    let width = report
        .classes
        .iter()
        .map(|c| c.name.len())
        .chain(["Weighted Avg".len()])
        .max()
        .unwrap_or(0);
    let mut out = String::new();
    let line = |out: &mut String, label: &str, cells: [String; 3]| {
        writeln!(
            out,
            "{label:<width$} | {:>9} | {:>6} | {:>8}",
            cells[0], cells[1], cells[2]
        )
        .unwrap();
    };
    line(
        &mut out,
        "",
        ["Precision".into(), "Recall".into(), "f1-Score".into()],
    );
    let two = |v: f64| format!("{v:.2}");
    for c in &report.classes {
        line(
            &mut out,
            &c.name,
            [two(c.precision), two(c.recall), two(c.f1)],
        );
    }
    line(
        &mut out,
        "Accuracy",
        [
            String::new(),
            String::new(),
            format!("{:.3}", report.accuracy),
        ],
    );
    for (label, avg) in [
        ("Micro Avg", report.micro),
        ("Weighted Avg", report.weighted),
    ] {
        line(
            &mut out,
            label,
            [two(avg.precision), two(avg.recall), two(avg.f1)],
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cid(i: usize) -> ClassId {
        ClassId::new(i).unwrap()
    }

    #[test]
    fn perfect_predictions_are_diagonal() {
        let pairs = ClassId::all().flat_map(|c| std::iter::repeat_n((c, c), 10));
        let m = ConfusionMatrix::accumulate(pairs);
        for t in 0..8 {
            for p in 0..8 {
                assert_eq!(m.get(t, p), if t == p { 10 } else { 0 });
            }
        }
        let r = m.report().unwrap();
        assert!(r
            .classes
            .iter()
            .all(|c| c.precision == 1.0 && c.recall == 1.0 && c.f1 == 1.0));
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(
            r.micro,
            Prf {
                precision: 1.0,
                recall: 1.0,
                f1: 1.0
            }
        );
        assert_eq!(
            r.weighted,
            Prf {
                precision: 1.0,
                recall: 1.0,
                f1: 1.0
            }
        );
    }

    #[test]
    fn empty_input() {
        let m = ConfusionMatrix::accumulate(std::iter::empty());
        assert_eq!(m.total(), 0);
        assert!(matches!(m.report(), Err(Error::Input(_))));
    }

    #[test]
    fn direct_counting() {
        let m = ConfusionMatrix::accumulate([
            (cid(0), cid(0)),
            (cid(0), cid(1)),
            (cid(1), cid(1)),
            (cid(1), cid(1)),
        ]);
        assert_eq!(
            (m.get(0, 0), m.get(0, 1), m.get(1, 1), m.total()),
            (1, 1, 2, 4)
        );
    }

    #[test]
    fn two_class_hand_computation() {
        let m = ConfusionMatrix::from_rows(&[vec![2, 0], vec![1, 1]]).unwrap();
        let r = m.report().unwrap();
        assert!((r.classes[0].precision - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.classes[1].precision, 1.0);
        assert_eq!(r.classes[0].recall, 1.0);
        assert_eq!(r.classes[1].recall, 0.5);
        assert_eq!(r.accuracy, 0.75);
        assert_eq!(r.classes[0].name, "class 0");
    }

    #[test]
    fn out_of_range_is_domain_error() {
        assert!(matches!(
            ConfusionMatrix::from_indices(8, [(0, 8)]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn empty_columns_give_zero() {
        let m = ConfusionMatrix::from_rows(&[vec![0, 3], vec![0, 1]]).unwrap();
        let r = m.report().unwrap();
        assert_eq!(r.classes[0].precision, 0.0);
        assert_eq!(r.classes[0].f1, 0.0);
    }

    fn report_with(precision: f64, recall: f64, f1: f64, accuracy: f64) -> ClassificationReport {
        let classes = ClassId::all()
            .map(|c| ClassMetrics {
                name: c.name().into(),
                precision,
                recall,
                f1,
                support: 1,
            })
            .collect();
        let avg = Prf {
            precision,
            recall,
            f1,
        };
        ClassificationReport {
            classes,
            accuracy,
            micro: avg,
            weighted: avg,
            total: 8,
        }
    }

    #[test]
    fn renders_table_cells() {
        let mut r = report_with(1.0, 1.0, 1.0, 0.875);
        r.classes[1] = ClassMetrics {
            name: "Bacterial Wilt".into(),
            precision: 0.90,
            recall: 0.88,
            f1: 0.89,
            support: 1,
        };
        let text = render_report(&r);
        let row = text
            .lines()
            .find(|l| l.starts_with("Bacterial Wilt"))
            .unwrap();
        let cells: Vec<&str> = row.split('|').skip(1).map(str::trim).collect();
        assert_eq!(cells, ["0.90", "0.88", "0.89"]);
        let acc = text.lines().find(|l| l.starts_with("Accuracy")).unwrap();
        assert!(acc.trim_end().ends_with("0.875"));
        let labels: Vec<&str> = text
            .lines()
            .skip(1)
            .map(|l| l.split('|').next().unwrap().trim())
            .collect();
        assert_eq!(labels[0], "Anthracnose");
        assert_eq!(&labels[8..], ["Accuracy", "Micro Avg", "Weighted Avg"]);
    }

    #[test]
    fn all_ones_render_as_one() {
        let text = render_report(&report_with(1.0, 1.0, 1.0, 1.0));
        for l in text.lines().skip(1).filter(|l| !l.starts_with("Accuracy")) {
            for cell in l.split('|').skip(1) {
                assert_eq!(cell.trim(), "1.00");
            }
        }
    }

    #[test]
    fn report_file_keeps_full_precision() {
        let m = ConfusionMatrix::from_rows(&[vec![2, 0], vec![1, 1]]).unwrap();
        let file = ReportFile::new(m.report().unwrap(), &m);
        let back: ReportFile = serde_json::from_str(&file.to_json()).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.confusion_matrix, vec![vec![2, 0], vec![1, 1]]);
    }
}
