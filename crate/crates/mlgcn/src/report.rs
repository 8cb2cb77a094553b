//! Plain-text renderings of metrics, training history and sweep tables.

use mlgcn_core::ablation::{SweepOutcome, SweepRow};
use mlgcn_core::embeddings::LabelVocabulary;
use mlgcn_core::metrics::MetricsReport;
use mlgcn_core::train::TrainHistory;

/// `name=value` lines at four decimals, then per-class AP.
pub fn metrics_text(report: &MetricsReport, vocab: &LabelVocabulary) -> String {
    let mut out = format!("rule={}\n", report.rule);
    for (name, value) in report.entries() {
        out.push_str(&format!("{name}={value:.4}\n"));
    }
    for (i, ap) in report.per_class_ap.iter().enumerate() {
        let name = vocab.name(i).unwrap_or("?");
        match ap {
            Some(v) => out.push_str(&format!("AP.{name}={v:.4}\n")),
            None => out.push_str(&format!("AP.{name}=none\n")),
        }
    }
    out
}

/// Tab-separated `epoch loss lr`, plus validation mAP when recorded.
pub fn history_tsv(history: &TrainHistory) -> String {
    let with_validation = history.epochs.iter().any(|e| e.validation.is_some());
    let mut out = String::from("epoch\tloss\tlr");
    if with_validation {
        out.push_str("\tval_mAP");
    }
    out.push('\n');
    for e in &history.epochs {
        out.push_str(&format!("{}\t{}\t{}", e.epoch, e.loss, e.lr));
        if with_validation {
            match &e.validation {
                Some(r) => out.push_str(&format!("\t{}", r.map)),
                None => out.push_str("\tnone"),
            }
        }
        out.push('\n');
    }
    out
}

pub const SWEEP_HEADER: &str =
    "tau\tp\tlayer_dims\tedges\tzero_diagonal_rows\tdegenerate_diagonal\toutcome\tmAP\tCF1\tOF1\tfirst_loss\tfinal_loss\tdetail";

fn count(v: Option<usize>) -> String {
    v.map_or_else(|| "none".into(), |n| n.to_string())
}

/// One row per grid point, in grid order.
pub fn sweep_tsv(rows: &[SweepRow]) -> String {
    let mut out = format!("{SWEEP_HEADER}\n");
    for row in rows {
        let dims: Vec<String> = row.point.layer_dims.iter().map(|d| d.to_string()).collect();
        let (outcome, numbers, detail) = match &row.outcome {
            SweepOutcome::Completed { map, cf1, of1, first_loss, final_loss } => (
                "completed",
                format!("{map:.4}\t{cf1:.4}\t{of1:.4}\t{first_loss:.6}\t{final_loss:.6}"),
                String::new(),
            ),
            SweepOutcome::Diverged(msg) => ("diverged", "none\tnone\tnone\tnone\tnone".into(), msg.clone()),
            SweepOutcome::Rejected(msg) => ("rejected", "none\tnone\tnone\tnone\tnone".into(), msg.clone()),
        };
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{outcome}\t{numbers}\t{}\n",
            row.point.tau,
            row.point.p,
            dims.join(","),
            count(row.edges),
            count(row.zero_diagonal_rows),
            row.degenerate_diagonal(),
            detail.replace(['\t', '\n'], " "),
        ));
    }
    out
}
