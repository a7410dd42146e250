use std::fmt::Write as _;

use super::{AblationRow, ConfusionMatrix, CvReport, MetricsReport};

/// Fixed-precision number formatting so CSV output is byte-stable.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.6}")
}

/// Header row of class slugs, then one row of counts per true class.
pub fn confusion_csv(cm: &ConfusionMatrix) -> String {
    let mut out = cm.classes.iter().map(|c| c.slug()).collect::<Vec<_>>().join(",");
    out.push('\n');
    for row in &cm.counts {
        out.push_str(&row.iter().map(u64::to_string).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

/// `metric,class,value` rows. Aggregate metrics use class `macro` or `all`.
pub fn metrics_csv(report: &MetricsReport) -> String {
    let mut out = String::from("metric,class,value\n");
    for c in &report.per_class {
        for (name, v) in [("precision", c.precision), ("recall", c.recall), ("f1", c.f1)] {
            let _ = writeln!(out, "{name},{},{}", c.label.slug(), fmt_num(v));
        }
        let _ = writeln!(out, "support,{},{}", c.label.slug(), c.support);
    }
    for (name, v) in [
        ("precision", report.macro_precision),
        ("recall", report.macro_recall),
        ("f1", report.macro_f1),
    ] {
        let _ = writeln!(out, "{name},macro,{}", fmt_num(v));
    }
    let _ = writeln!(out, "accuracy,all,{}", fmt_num(report.accuracy));
    if let Some(v) = report.roc_auc_ovr {
        let _ = writeln!(out, "roc_auc_ovr,macro,{}", fmt_num(v));
    }
    if let Some(v) = report.zero_r_accuracy {
        let _ = writeln!(out, "zero_r_accuracy,all,{}", fmt_num(v));
    }
    out
}

pub fn confusion_text(cm: &ConfusionMatrix) -> String {
    let width = cm.classes.iter().map(|c| c.display_name().len()).max().unwrap_or(0);
    let mut out = format!("{:width$}", "true \\ predicted");
    let abbrev: Vec<String> = cm.classes.iter().map(|c| c.slug().chars().take(8).collect()).collect();
    for a in &abbrev {
        let _ = write!(out, " {a:>8}");
    }
    out.push('\n');
    for (c, row) in cm.classes.iter().zip(&cm.counts) {
        let _ = write!(out, "{:width$}", c.display_name());
        for n in row {
            let _ = write!(out, " {n:>8}");
        }
        out.push('\n');
    }
    out
}

pub fn metrics_text(report: &MetricsReport) -> String {
    let width = report
        .per_class
        .iter()
        .map(|c| c.label.display_name().len())
        .max()
        .unwrap_or(5)
        .max(5);
    let mut out = format!("{:width$} {:>9} {:>9} {:>9} {:>8}\n", "class", "precision", "recall", "f1", "support");
    for c in &report.per_class {
        let flag = if c.precision_undefined { " (never predicted)" } else { "" };
        let _ = writeln!(
            out,
            "{:width$} {:>9.3} {:>9.3} {:>9.3} {:>8}{flag}",
            c.label.display_name(),
            c.precision,
            c.recall,
            c.f1,
            c.support
        );
    }
    let _ = writeln!(
        out,
        "{:width$} {:>9.3} {:>9.3} {:>9.3}",
        "macro", report.macro_precision, report.macro_recall, report.macro_f1
    );
    let _ = writeln!(out, "accuracy: {:.4}", report.accuracy);
    if let Some(v) = report.roc_auc_ovr {
        let _ = writeln!(out, "roc_auc_ovr: {v:.4}");
    }
    if !report.roc_auc_skipped.is_empty() {
        let names: Vec<_> = report.roc_auc_skipped.iter().map(|l| l.display_name()).collect();
        let _ = writeln!(out, "roc_auc skipped (single-sided): {}", names.join(", "));
    }
    if let Some(v) = report.zero_r_accuracy {
        let _ = writeln!(out, "zero_r_accuracy: {v:.4}");
    }
    out
}

pub fn cv_text(cv: &CvReport) -> String {
    let mut out = format!("{}-fold cross-validation\n", cv.folds_used);
    for w in &cv.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    for (name, ms) in &cv.summary {
        let _ = writeln!(out, "{name}: {:.4} +/- {:.4}", ms.mean, ms.std);
    }
    out.push_str("\npooled over folds\n");
    out.push_str(&metrics_text(&cv.pooled));
    out.push('\n');
    out.push_str(&confusion_text(&cv.pooled.confusion));
    out
}

/// `metric,mean,std` rows followed by nothing else.
pub fn cv_csv(cv: &CvReport) -> String {
    let mut out = String::from("metric,mean,std\n");
    for (name, ms) in &cv.summary {
        let _ = writeln!(out, "{name},{},{}", fmt_num(ms.mean), fmt_num(ms.std));
    }
    out
}

/// One row per source configuration; names are quoted where they contain commas.
pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "configuration",
        "n_features",
        "macro_precision",
        "macro_recall",
        "macro_f1",
        "accuracy",
        "roc_auc_ovr",
    ])
    .expect("in-memory write");
    for r in rows {
        w.write_record([
            r.name.clone(),
            r.n_features.to_string(),
            fmt_num(r.cv.mean("macro_precision")),
            fmt_num(r.cv.mean("macro_recall")),
            fmt_num(r.cv.mean("macro_f1")),
            fmt_num(r.cv.mean("accuracy")),
            r.cv.summary.get("roc_auc_ovr").map_or(String::new(), |m| fmt_num(m.mean)),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
}

pub fn ablation_text(rows: &[AblationRow]) -> String {
    let mut out = format!(
        "{:40} {:>9} {:>9} {:>9} {:>9}\n",
        "configuration", "precision", "recall", "f1", "roc_auc"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:40} {:>9.3} {:>9.3} {:>9.3} {:>9.3}",
            r.name,
            r.cv.mean("macro_precision"),
            r.cv.mean("macro_recall"),
            r.cv.mean("macro_f1"),
            r.cv.mean("roc_auc_ovr"),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::DomainLabel::*;
    use crate::eval::metrics_from_confusion;

    #[test]
    fn confusion_csv_layout() {
        let cm = ConfusionMatrix::from_counts(&[Documentation, SoftwareTools], vec![vec![3, 1], vec![0, 2]]).unwrap();
        assert_eq!(confusion_csv(&cm), "documentation,software_tools\n3,1\n0,2\n");
    }

    #[test]
    fn metrics_csv_rows() {
        let cm = ConfusionMatrix::from_counts(&[Documentation, SoftwareTools], vec![vec![3, 1], vec![0, 2]]).unwrap();
        let csv = metrics_csv(&metrics_from_confusion(&cm).unwrap());
        assert!(csv.starts_with("metric,class,value\n"));
        assert!(csv.contains("recall,documentation,0.750000\n"));
        assert!(csv.contains("accuracy,all,0.833333\n"));
        assert!(metrics_text(&metrics_from_confusion(&cm).unwrap()).contains("accuracy: 0.8333"));
    }
}
