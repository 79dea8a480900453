use std::fmt::Write as _;
use std::path::Path;

use super::confusion::ConfusionMatrix;
use super::stats::{ClassStats, OverallStats};
use super::MetricsError;
use crate::text::CLASS_NAMES;

pub const UNDEFINED: &str = "undefined";

pub const OVERALL_FILE: &str = "overall_stats.csv";
pub const CLASS_FILE: &str = "class_stats.csv";
pub const CONFUSION_FILE: &str = "confusion_matrix.csv";
pub const TEXT_FILE: &str = "report.txt";

fn fmt5(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.5}")
    } else {
        UNDEFINED.to_owned()
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| UNDEFINED.to_owned(), fmt5)
}

fn fmt_label(v: Option<&str>) -> String {
    v.unwrap_or(UNDEFINED).to_owned()
}

/// Rendered evaluation artifacts, all deterministic for identical inputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub overall_csv: String,
    pub class_csv: String,
    pub confusion_csv: String,
    pub text: String,
}

/// `(merit, value)` rows of the overall table.
pub fn overall_rows(overall: &OverallStats, train_accuracy: Option<f64>) -> Vec<(&'static str, String)> {
    vec![
        (
            "95% CI",
            format!("({},{})", fmt5(overall.ci95.0), fmt5(overall.ci95.1)),
        ),
        ("Train Accuracy", fmt_opt(train_accuracy)),
        ("Test Accuracy", fmt5(overall.accuracy)),
        ("F1 Macro", fmt_opt(overall.f1_macro)),
        ("F1 Micro", fmt5(overall.f1_micro)),
        ("Hamming Loss", fmt5(overall.hamming_loss)),
        ("Reference Entropy", fmt5(overall.reference_entropy)),
        ("Response Entropy", fmt5(overall.response_entropy)),
        ("Standard Error", fmt5(overall.standard_error)),
        ("Kappa", fmt_opt(overall.kappa)),
        ("Kappa Standard Error", fmt_opt(overall.kappa_se)),
        ("SOA1(Landis & Koch)", fmt_label(overall.soa1_landis_koch)),
        ("SOA2(Fleiss)", fmt_label(overall.soa2_fleiss)),
        ("SOA3(Altman)", fmt_label(overall.soa3_altman)),
    ]
}

/// `(merit, [class 0, class 1])` rows of the per-class table.
pub fn class_rows(stats: &[ClassStats; 2]) -> Vec<(&'static str, [String; 2])> {
    let row = |f: &dyn Fn(&ClassStats) -> Option<f64>| [fmt_opt(f(&stats[0])), fmt_opt(f(&stats[1]))];
    vec![
        ("AGF(Adjusted F-score)", row(&|s| s.agf)),
        ("AUC(Area under the ROC curve)", row(&|s| s.auc)),
        ("ERR(Error rate)", row(&|s| Some(s.err))),
        ("FNR", row(&|s| s.fnr)),
        ("FPR", row(&|s| s.fpr)),
        ("Sensitivity", row(&|s| s.sensitivity)),
        ("Specificity", row(&|s| s.specificity)),
        ("Precision", row(&|s| s.precision)),
        ("F1-Score", row(&|s| s.f1)),
    ]
}

fn csv_string(rows: Vec<Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for r in rows {
        w.write_record(&r).expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("utf-8 csv")
}

pub fn render_report(
    stats: &[ClassStats; 2],
    overall: &OverallStats,
    cm: &ConfusionMatrix,
    train_accuracy: Option<f64>,
) -> Report {
    let overall_table = overall_rows(overall, train_accuracy);
    let class_table = class_rows(stats);

    let mut rows = vec![vec!["merit".to_owned(), "value".to_owned()]];
    rows.extend(
        overall_table
            .iter()
            .map(|(k, v)| vec![(*k).to_owned(), v.clone()]),
    );
    let overall_csv = csv_string(rows);

    let mut rows = vec![vec![
        "merit".to_owned(),
        CLASS_NAMES[0].to_owned(),
        CLASS_NAMES[1].to_owned(),
    ]];
    rows.extend(
        class_table
            .iter()
            .map(|(k, [a, b])| vec![(*k).to_owned(), a.clone(), b.clone()]),
    );
    let class_csv = csv_string(rows);

    let mut rows = vec![vec![
        "true\\predicted".to_owned(),
        CLASS_NAMES[0].to_owned(),
        CLASS_NAMES[1].to_owned(),
    ]];
    for (t, name) in CLASS_NAMES.iter().enumerate() {
        rows.push(vec![
            (*name).to_owned(),
            cm.get(t, 0).to_string(),
            cm.get(t, 1).to_string(),
        ]);
    }
    let confusion_csv = csv_string(rows);

    let mut text = String::new();
    let _ = writeln!(text, "Overall statistics (n = {})", overall.n);
    for (k, v) in &overall_table {
        let _ = writeln!(text, "  {k:<28} {v}");
    }
    let _ = writeln!(text);
    let _ = writeln!(
        text,
        "Class statistics {:>23} {:>12}",
        CLASS_NAMES[0], CLASS_NAMES[1]
    );
    for (k, [a, b]) in &class_table {
        let _ = writeln!(text, "  {k:<30} {a:>12} {b:>12}");
    }
    let _ = writeln!(text);
    let _ = writeln!(text, "Confusion matrix (rows: true, columns: predicted)");
    let _ = writeln!(text, "  {:<12} {:>12} {:>12}", "", CLASS_NAMES[0], CLASS_NAMES[1]);
    for (t, name) in CLASS_NAMES.iter().enumerate() {
        let _ = writeln!(text, "  {:<12} {:>12} {:>12}", name, cm.get(t, 0), cm.get(t, 1));
    }

    Report {
        overall_csv,
        class_csv,
        confusion_csv,
        text,
    }
}

impl Report {
    /// Writes the four report files into `dir`, creating it if needed.
    pub fn write_to(&self, dir: &Path) -> Result<(), MetricsError> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(OVERALL_FILE), &self.overall_csv)?;
        std::fs::write(dir.join(CLASS_FILE), &self.class_csv)?;
        std::fs::write(dir.join(CONFUSION_FILE), &self.confusion_csv)?;
        std::fs::write(dir.join(TEXT_FILE), &self.text)?;
        Ok(())
    }
}
