//! Command implementations behind the `ebinlab` binary: file-based
//! distance estimation, sequence diagnostics, and the reproduction suites.
//! Everything returns an exit code so the binary stays a thin shell.

use crate::config::{ReportFormat, RunConfig};
use crate::field::MetricField;
use crate::omega::{equivalence_test, omega_report, SequenceManifest};
use crate::report::{
    sequence_series_csv, write_report, DistanceReport, EquivalenceSummary, OmegaReport,
    ReportHeader, SequenceSummary,
};
use crate::suite::{run_suite, CriterionResult};
use crate::{Error, Result};
use std::path::Path;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NOT_CERTIFIED: i32 = 2;
pub const EXIT_PARSE: i32 = 64;
pub const EXIT_SHAPE: i32 = 65;
pub const EXIT_PRECONDITION: i32 = 66;

/// Exit code for an error per the documented contract: parse failures 64,
/// shape mismatches 65, precondition failures 66.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Parse { .. } => EXIT_PARSE,
        Error::ShapeMismatch(_) => EXIT_SHAPE,
        _ => EXIT_PRECONDITION,
    }
}

/// `distance <g0> <g1>`: write a DistanceEstimate report; exit 0 when the
/// interval is certified, 2 otherwise.
pub fn run_distance(
    g0_path: &Path,
    g1_path: &Path,
    config: &RunConfig,
    out_dir: &Path,
) -> Result<i32> {
    config.validate()?;
    let tol = &config.tolerances;
    let g0 = MetricField::load_with(g0_path, tol)?;
    let g1 = MetricField::load_with(g1_path, tol)?;
    if g0.kind() != crate::field::FieldKind::Metric || g1.kind() != crate::field::FieldKind::Metric
    {
        return Err(Error::NotPositiveDefinite("distance inputs must be kind=metric".into()));
    }
    let est = crate::distance::estimate(&g0, &g1, config)?;
    let report = DistanceReport::new(&est, config);
    let csv = format!(
        "lower,upper,certified,witness\n{},{},{},{}\n",
        est.lower, est.upper, est.certified, est.upper_witness.label
    );
    write_report(&report, Some(&csv), out_dir, "distance", config.format)?;
    Ok(if est.certified { EXIT_OK } else { EXIT_NOT_CERTIFIED })
}

/// `omega <manifest>`: per-sequence diagnostics (JSON + CSV series + the
/// ω-limit field) and, with two or more sequences, the pairwise
/// equivalence matrix.
pub fn run_omega(manifest_path: &Path, config: &RunConfig, out_dir: &Path) -> Result<i32> {
    config.validate()?;
    let manifest = SequenceManifest::load(manifest_path)?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let sequences = manifest.materialize(base, &config.tolerances)?;
    if sequences.is_empty() {
        return Err(Error::EmptySequence);
    }
    std::fs::create_dir_all(out_dir)?;
    let mut summaries = Vec::new();
    let mut certified = true;
    for (name, seq) in &sequences {
        let diag = omega_report(seq, config)?;
        certified &= diag.pairwise_d.iter().all(|e| e.certified);
        let csv = sequence_series_csv(&diag);
        if matches!(config.format, ReportFormat::Csv | ReportFormat::Both) {
            std::fs::write(out_dir.join(format!("{name}_series.csv")), &csv)?;
        }
        diag.omega_limit.save(&out_dir.join(format!("{name}_omega_limit.json")))?;
        summaries.push(SequenceSummary::new(name, &diag, seq.len()));
    }
    let mut equivalence = Vec::new();
    for i in 0..sequences.len() {
        for j in i + 1..sequences.len() {
            let rep = equivalence_test(&sequences[i].1, &sequences[j].1, config)?;
            equivalence.push(EquivalenceSummary::new(&sequences[i].0, &sequences[j].0, &rep));
        }
    }
    let report =
        OmegaReport { header: ReportHeader::new(config), sequences: summaries, equivalence };
    write_report(&report, None, out_dir, "omega", config.format)?;
    Ok(if certified { EXIT_OK } else { EXIT_NOT_CERTIFIED })
}

/// `reproduce <suite>`: run the named checks, print the pass/fail table,
/// write the summary, and exit nonzero on any failure.
pub fn run_reproduce(suite: &str, config: &RunConfig, out_dir: &Path) -> Result<i32> {
    config.validate()?;
    let results = run_suite(suite)?;
    print_table(suite, &results);
    #[derive(serde::Serialize)]
    struct SuiteReport {
        header: ReportHeader,
        suite: String,
        results: Vec<CriterionResult>,
    }
    let report = SuiteReport {
        header: ReportHeader::new(config),
        suite: suite.to_string(),
        results: results.clone(),
    };
    write_report(&report, None, out_dir, &format!("reproduce_{suite}"), config.format)?;
    Ok(if results.iter().all(|r| r.pass) { EXIT_OK } else { 1 })
}

fn print_table(suite: &str, results: &[CriterionResult]) {
    println!("suite {suite}");
    for r in results {
        println!("[{}] criterion {:>2}  {}", if r.pass { "PASS" } else { "FAIL" }, r.id, r.name);
        for line in &r.details {
            println!("       {line}");
        }
    }
    let passed = results.iter().filter(|r| r.pass).count();
    println!("{passed}/{} criteria passed", results.len());
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{FieldKind, TorusGrid};
    use crate::spd::SymMat;

    #[test]
    fn exit_codes_follow_contract() {
        assert_eq!(exit_code(&Error::Parse { offset: 3, what: "x".into() }), 64);
        assert_eq!(exit_code(&Error::ShapeMismatch("x".into())), 65);
        assert_eq!(exit_code(&Error::NotPositiveDefinite("x".into())), 66);
    }

    #[test]
    fn distance_command_roundtrip_and_determinism() {
        let dir = tempfile::tempdir().unwrap();
        let grid = TorusGrid::unit(2, 8).unwrap();
        let g0 = MetricField::euclidean(grid.clone()).unwrap();
        let g1 = MetricField::constant(grid, SymMat::diag(&[1.0, 0.25]), FieldKind::Metric).unwrap();
        let p0 = dir.path().join("g0.json");
        let p1 = dir.path().join("g1.json");
        g0.save(&p0).unwrap();
        g1.save(&p1).unwrap();
        let mut config = RunConfig::default();
        config.budget.path_iters = 0;
        config.budget.three_piece_evals = 9;
        let out_a = dir.path().join("a");
        let out_b = dir.path().join("b");
        assert_eq!(run_distance(&p0, &p1, &config, &out_a).unwrap(), EXIT_OK);
        assert_eq!(run_distance(&p0, &p1, &config, &out_b).unwrap(), EXIT_OK);
        let a = std::fs::read(out_a.join("distance.json")).unwrap();
        let b = std::fs::read(out_b.join("distance.json")).unwrap();
        assert_eq!(a, b, "byte-identical reports for identical inputs and config");
    }

    #[test]
    fn identical_inputs_give_zero_interval() {
        let dir = tempfile::tempdir().unwrap();
        let grid = TorusGrid::unit(2, 8).unwrap();
        let g = MetricField::euclidean(grid).unwrap();
        let p = dir.path().join("g.json");
        g.save(&p).unwrap();
        let config = RunConfig::default();
        let out = dir.path().join("out");
        assert_eq!(run_distance(&p, &p, &config, &out).unwrap(), EXIT_OK);
        let text = std::fs::read_to_string(out.join("distance.json")).unwrap();
        let json: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(json["lower"].as_f64().unwrap(), 0.0);
        assert_eq!(json["upper"].as_f64().unwrap(), 0.0);
    }
}
