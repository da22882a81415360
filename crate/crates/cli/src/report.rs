use dect_core::metrics::EvalReport;
use std::fmt::Write as _;
use std::io;
use std::path::Path;

/// One evaluated (model, target, slice) combination.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub model: String,
    pub target: String,
    pub report: EvalReport,
}

/// Ordered evaluation results, exportable as CSV and as a readable table.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

impl ResultTable {
    pub fn push(&mut self, row: ResultRow) {
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Machine-readable export. Full-precision floats so identical runs
    /// produce identical bytes.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("model,target,slice,r,ssim,n\n");
        for row in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                row.model,
                row.target,
                row.report.slice_label,
                row.report.r,
                row.report.ssim,
                row.report.n_pixels
            );
        }
        out
    }

    /// Human-readable table in the style of the reference result listings.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<28} {:>8} {:>8}   Slice", "Estimation", "r", "SSIM");
        let _ = writeln!(out, "{}", "-".repeat(56));
        for row in &self.rows {
            let _ = writeln!(
                out,
                "{:<28} {:>8.4} {:>8.4}   {}",
                format!("{} ({})", row.target, row.model),
                row.report.r,
                row.report.ssim,
                row.report.slice_label
            );
        }
        out
    }

    /// Rows falling below the thresholds, described for the failure report.
    pub fn failing(&self, r_min: f64, ssim_min: f64) -> Vec<String> {
        self.rows
            .iter()
            .filter(|row| row.report.r < r_min || row.report.ssim < ssim_min)
            .map(|row| {
                format!(
                    "{} ({}) on {}: r = {:.6} (need {r_min}), ssim = {:.6} (need {ssim_min})",
                    row.target, row.model, row.report.slice_label, row.report.r, row.report.ssim
                )
            })
            .collect()
    }
}

/// Two-column CSV backing the scatter figures.
pub fn write_scatter_csv(path: &Path, pairs: &[(f64, f64)]) -> io::Result<()> {
    let mut out = String::from("truth,prediction\n");
    for (truth, pred) in pairs {
        let _ = writeln!(out, "{truth},{pred}");
    }
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, out)
}
