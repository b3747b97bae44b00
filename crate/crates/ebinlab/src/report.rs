//! Report emission: JSON documents and CSV series for external plotting.
//!
//! Every report embeds a header with the library version, the RNG name and
//! seed, and the full configuration, so identical inputs and config produce
//! byte-identical files.

use crate::config::{ReportFormat, RunConfig};
use crate::distance::DistanceEstimate;
use crate::omega::{EquivalenceReport, PointClass, SequenceDiagnostics, Verdict};
use crate::path::PathFile;
use crate::{Error, Result};
use serde::Serialize;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, Serialize)]
pub struct ReportHeader {
    pub tool: &'static str,
    pub version: &'static str,
    pub rng: &'static str,
    pub seed: u64,
    pub config: RunConfig,
}

impl ReportHeader {
    pub fn new(config: &RunConfig) -> Self {
        ReportHeader {
            tool: "ebinlab",
            version: crate::version(),
            rng: "chacha8",
            seed: config.seed,
            config: config.clone(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct DistanceReport {
    pub header: ReportHeader,
    pub lower: f64,
    pub upper: f64,
    pub certified: bool,
    pub lower_witness: crate::distance::LowerWitness,
    pub upper_witness: UpperWitnessSummary,
    /// Full path for replay.
    pub witness_path: PathFile,
}

#[derive(Debug, Serialize)]
pub struct UpperWitnessSummary {
    pub label: String,
    pub value: f64,
    pub quadrature_error_estimate: f64,
}

impl DistanceReport {
    pub fn new(estimate: &DistanceEstimate, config: &RunConfig) -> Self {
        DistanceReport {
            header: ReportHeader::new(config),
            lower: estimate.lower,
            upper: estimate.upper,
            certified: estimate.certified,
            lower_witness: estimate.lower_witness.clone(),
            upper_witness: UpperWitnessSummary {
                label: estimate.upper_witness.label.clone(),
                value: estimate.upper_witness.length.value,
                quadrature_error_estimate: estimate.upper_witness.length.error_estimate,
            },
            witness_path: estimate.upper_witness.path.to_file(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct OmegaReport {
    pub header: ReportHeader,
    pub sequences: Vec<SequenceSummary>,
    pub equivalence: Vec<EquivalenceSummary>,
}

#[derive(Debug, Serialize)]
pub struct SequenceSummary {
    pub name: String,
    pub terms: usize,
    pub collapsed_nodes: usize,
    pub converged_nodes: usize,
    pub undecided_nodes: usize,
    pub delta_num: f64,
    pub deflated_volume_fraction: f64,
    pub omega_l1: Vec<f64>,
    pub volume_series: Vec<crate::omega::MaskSeries>,
    pub pairwise: Vec<IntervalSummary>,
    pub summability: crate::omega::SummabilityReport,
}

#[derive(Debug, Serialize)]
pub struct IntervalSummary {
    pub lower: f64,
    pub upper: f64,
    pub certified: bool,
    pub witness: String,
}

#[derive(Debug, Serialize)]
pub struct EquivalenceSummary {
    pub a: String,
    pub b: String,
    pub verdict: Verdict,
    pub final_upper: f64,
    pub final_lower: f64,
    pub limit_mask_disagreement: f64,
    pub limit_value_disagreement: f64,
}

impl SequenceSummary {
    pub fn new(name: &str, diag: &SequenceDiagnostics, terms: usize) -> Self {
        let count = |class: PointClass| diag.point_class.iter().filter(|c| **c == class).count();
        let total = diag.point_class.len().max(1);
        SequenceSummary {
            name: name.to_string(),
            terms,
            collapsed_nodes: count(PointClass::Collapsed),
            converged_nodes: count(PointClass::Converged),
            undecided_nodes: count(PointClass::Undecided),
            delta_num: diag.delta_num,
            deflated_volume_fraction: diag.deflated_mask.count() as f64 / total as f64,
            omega_l1: diag.omega_l1.clone(),
            volume_series: diag.volume_series.clone(),
            pairwise: diag
                .pairwise_d
                .iter()
                .map(|e| IntervalSummary {
                    lower: e.lower,
                    upper: e.upper,
                    certified: e.certified,
                    witness: e.upper_witness.label.clone(),
                })
                .collect(),
            summability: diag.summability.clone(),
        }
    }
}

impl EquivalenceSummary {
    pub fn new(a: &str, b: &str, report: &EquivalenceReport) -> Self {
        EquivalenceSummary {
            a: a.to_string(),
            b: b.to_string(),
            verdict: report.verdict,
            final_upper: *report.termwise_upper.last().unwrap_or(&f64::NAN),
            final_lower: *report.termwise_lower.last().unwrap_or(&f64::NAN),
            limit_mask_disagreement: report.limit_mask_disagreement,
            limit_value_disagreement: report.limit_value_disagreement,
        }
    }
}

/// CSV rendering of the per-term series of one sequence diagnostics:
/// index, volumes per mask, ‖Ω_N‖ and the pairwise interval (the last two
/// start at term 1).
pub fn sequence_series_csv(diag: &SequenceDiagnostics) -> String {
    let mut out = String::from("term");
    for series in &diag.volume_series {
        let _ = write!(out, ",vol_{}", series.mask);
    }
    out.push_str(",omega_l1,pair_lower,pair_upper\n");
    let terms = diag.volume_series.first().map(|s| s.values.len()).unwrap_or(0);
    for i in 0..terms {
        let _ = write!(out, "{i}");
        for series in &diag.volume_series {
            let _ = write!(out, ",{}", series.values[i]);
        }
        if i >= 1 {
            let _ = write!(out, ",{}", diag.omega_l1[i - 1]);
            let _ =
                write!(out, ",{},{}", diag.pairwise_d[i - 1].lower, diag.pairwise_d[i - 1].upper);
        } else {
            out.push_str(",,,");
        }
        out.push('\n');
    }
    out
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::InvalidParameter(e.to_string()))
}

/// Write the document in the configured format(s); returns written paths.
pub fn write_report<T: Serialize>(
    value: &T,
    csv: Option<&str>,
    out_dir: &Path,
    stem: &str,
    format: ReportFormat,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    if matches!(format, ReportFormat::Json | ReportFormat::Both) {
        let path = out_dir.join(format!("{stem}.json"));
        std::fs::write(&path, to_json_pretty(value)? + "\n")?;
        written.push(path);
    }
    if matches!(format, ReportFormat::Csv | ReportFormat::Both) {
        if let Some(csv) = csv {
            let path = out_dir.join(format!("{stem}.csv"));
            std::fs::write(&path, csv)?;
            written.push(path);
        }
    }
    Ok(written)
}
