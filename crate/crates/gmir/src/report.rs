//! Experiment reports: per-run metrics with transfer annotations, aggregated
//! over seeds, rendered as an aligned table and as JSON.
//!
//! Reports contain only seed-reproducible quantities (metrics and work
//! counters); wall-clock lives in the run logs so identical runs produce
//! byte-identical report files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::SweepParameter;
use crate::error::{Error, Result};
use crate::metrics::mean_std;
use crate::strategies::StrategyKind;
use crate::timing::TimingLedger;

/// Mean and sample standard deviation over seeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn over(values: &[f64]) -> Self {
        let (mean, std) = mean_std(values);
        MeanStd { mean, std }
    }
}

/// One run's numbers for one seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedOutcome {
    pub seed: u64,
    pub old_metric: f64,
    pub new_metric: f64,
    pub mean_metric: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub backward_transfer: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub forward_transfer: Option<f64>,
    pub ledger: TimingLedger,
}

/// One table row: a scratch run or a finetuning strategy, over all seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: String,
    pub old_metric: MeanStd,
    pub new_metric: MeanStd,
    pub mean_metric: MeanStd,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub backward_transfer: Option<MeanStd>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub forward_transfer: Option<MeanStd>,
    /// Work counters (identical across seeds; wall-clock is in the run logs).
    pub timing: TimingLedger,
    pub per_seed: Vec<SeedOutcome>,
}

impl ReportRow {
    /// Aggregates per-seed outcomes; transfer columns appear only when every
    /// seed has them.
    pub fn from_outcomes(label: &str, per_seed: Vec<SeedOutcome>) -> Self {
        assert!(!per_seed.is_empty(), "row needs at least one seed");
        let collect = |f: fn(&SeedOutcome) -> f64| -> Vec<f64> { per_seed.iter().map(f).collect() };
        let transfers = |f: fn(&SeedOutcome) -> Option<f64>| -> Option<MeanStd> {
            per_seed
                .iter()
                .map(f)
                .collect::<Option<Vec<f64>>>()
                .map(|v| MeanStd::over(&v))
        };
        ReportRow {
            label: label.to_string(),
            old_metric: MeanStd::over(&collect(|o| o.old_metric)),
            new_metric: MeanStd::over(&collect(|o| o.new_metric)),
            mean_metric: MeanStd::over(&collect(|o| o.mean_metric)),
            backward_transfer: transfers(|o| o.backward_transfer),
            forward_transfer: transfers(|o| o.forward_transfer),
            timing: per_seed[0].ledger.counters(),
            per_seed,
        }
    }
}

/// The Table-1/Table-2 analog for one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub seeds: Vec<u64>,
    pub rows: Vec<ReportRow>,
    /// Normalized config with all effective values; enough to reproduce the
    /// run bit-for-bit in single-threaded mode.
    pub config_echo: String,
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    pub fn row(&self, label: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    /// Aligned text table: metrics block plus a work-accounting block with
    /// reductions relative to scratch-all when that row exists.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let seeds = self
            .seeds
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join(", ");
        out.push_str(&format!("seeds: [{seeds}]\n\n"));

        let label_width = self
            .rows
            .iter()
            .map(|r| r.label.len())
            .max()
            .unwrap_or(6)
            .max(6);
        out.push_str(&format!(
            "{:<label_width$} | {:^22} | {:^22} | {:^14}\n",
            "method", "old (bwt)", "new (fwt)", "mean"
        ));
        out.push_str(&format!(
            "{:-<label_width$}-+-{:-<22}-+-{:-<22}-+-{:-<14}\n",
            "", "", "", ""
        ));
        for row in &self.rows {
            out.push_str(&format!(
                "{:<label_width$} | {:>22} | {:>22} | {:>14}\n",
                row.label,
                metric_cell(row.old_metric, row.backward_transfer),
                metric_cell(row.new_metric, row.forward_transfer),
                format!("{:6.2} ±{:5.2}", row.mean_metric.mean, row.mean_metric.std),
            ));
        }

        out.push_str("\nwork accounting (per run, gradient evaluations)\n");
        out.push_str(&format!(
            "{:<label_width$} | {:>9} | {:>11} | {:>9} | {:>9} | {:>9} | {:>7} | {:>10} | {:>10}\n",
            "method",
            "steps",
            "train-grads",
            "scoring",
            "ref-grads",
            "mir-fwd",
            "events",
            "total",
            "reduction%"
        ));
        let baseline = self
            .row("scratch-all")
            .map(|r| r.timing.total_gradient_work());
        for row in &self.rows {
            let t = &row.timing;
            let reduction = match baseline {
                Some(base) if base > 0 && row.label != "scratch-all" => {
                    format!(
                        "{:.2}",
                        crate::metrics::time_reduction(base as f64, t.total_gradient_work() as f64)
                            .expect("baseline > 0")
                    )
                }
                _ => "-".to_string(),
            };
            out.push_str(&format!(
                "{:<label_width$} | {:>9} | {:>11} | {:>9} | {:>9} | {:>9} | {:>7} | {:>10} | {:>10}\n",
                row.label,
                t.train_steps,
                t.train_sample_grads,
                t.scoring_sample_grads,
                t.ref_sample_grads,
                t.scoring_forward_passes,
                t.resample_events,
                t.total_gradient_work(),
                reduction,
            ));
        }
        out
    }
}

fn metric_cell(metric: MeanStd, transfer: Option<MeanStd>) -> String {
    match transfer {
        Some(t) => format!("{:6.2} ±{:5.2} ({:+.2})", metric.mean, metric.std, t.mean),
        None => format!("{:6.2} ±{:5.2}", metric.mean, metric.std),
    }
}

/// One grid point of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub value: f64,
    pub row: ReportRow,
}

/// BWT/FWT per grid point, over the same seeds and shared pretraining.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub strategy: StrategyKind,
    pub parameter: SweepParameter,
    pub seeds: Vec<u64>,
    pub points: Vec<SweepPoint>,
    pub config_echo: String,
}

impl SweepReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "sweep of {} over {}\n\n",
            self.strategy.label(),
            self.parameter.label()
        ));
        out.push_str(&format!(
            "{:>12} | {:^16} | {:^16} | {:^14} | {:>10}\n",
            self.parameter.label(),
            "bwt",
            "fwt",
            "mean",
            "total-work"
        ));
        for point in &self.points {
            let bwt = point
                .row
                .backward_transfer
                .map(|t| format!("{:+6.2} ±{:5.2}", t.mean, t.std))
                .unwrap_or_else(|| "-".into());
            let fwt = point
                .row
                .forward_transfer
                .map(|t| format!("{:+6.2} ±{:5.2}", t.mean, t.std))
                .unwrap_or_else(|| "-".into());
            out.push_str(&format!(
                "{:>12} | {:>16} | {:>16} | {:>6.2} ±{:5.2} | {:>10}\n",
                point.value,
                bwt,
                fwt,
                point.row.mean_metric.mean,
                point.row.mean_metric.std,
                point.row.timing.total_gradient_work(),
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outcome(seed: u64, old: f64, new: f64, bwt: Option<f64>) -> SeedOutcome {
        SeedOutcome {
            seed,
            old_metric: old,
            new_metric: new,
            mean_metric: (old + new) / 2.0,
            backward_transfer: bwt,
            forward_transfer: bwt.map(|b| b + 0.1),
            ledger: TimingLedger::default(),
        }
    }

    #[test]
    fn row_aggregation_and_optional_transfer() {
        let row = ReportRow::from_outcomes(
            "gmir",
            vec![outcome(1, 90.0, 80.0, Some(1.0)), outcome(2, 92.0, 82.0, Some(3.0))],
        );
        assert_eq!(row.old_metric.mean, 91.0);
        assert_eq!(row.backward_transfer.unwrap().mean, 2.0);
        let scratch = ReportRow::from_outcomes(
            "scratch-clear",
            vec![outcome(1, 90.0, 80.0, None), outcome(2, 92.0, 82.0, None)],
        );
        assert!(scratch.backward_transfer.is_none());
    }

    #[test]
    fn report_json_round_trips_and_renders() {
        let report = ExperimentReport {
            seeds: vec![1, 2],
            rows: vec![ReportRow::from_outcomes(
                "naive",
                vec![outcome(1, 90.0, 80.0, Some(-1.0)), outcome(2, 92.0, 82.0, Some(-2.0))],
            )],
            config_echo: "x = 1".to_string(),
        };
        let json = report.to_json();
        let parsed: ExperimentReport = serde_json::from_str(&json).unwrap();
        assert_eq!(report, parsed);
        let text = report.render_text();
        assert!(text.contains("naive"));
        assert!(text.contains("(-1.50)"));
    }
}
