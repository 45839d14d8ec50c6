//! Report documents: the single JSON source of truth for a `check` run
//! (`report-v1`), plus the human-readable rendering of the same document.
//!
//! Field order is fixed by struct declaration order and every collection is
//! a vector, so serializing the same run twice yields byte-identical text.

use pqgeo_core::checks::{
    run_checks, CheckOptions, CheckReport, ChecksError, Tolerances, Verdict,
};
use pqgeo_core::geometry::{ManifoldSpec, Mode};
use serde::Serialize;
use std::fmt::Write;

pub const SCHEMA: &str = "report-v1";

/// The spec slice of the document: enough to identify what was checked
/// without repeating every tensor entry (the spec file itself is the
/// canonical form; `source` says where it came from).
#[derive(Debug, Serialize)]
pub struct SpecSummary {
    pub name: String,
    pub source: String,
    pub dimension: usize,
    pub mode: &'static str,
    pub connection: &'static str,
    pub coords: Vec<String>,
    pub sample_points: usize,
    pub sample_box: Vec<(f64, f64)>,
}

/// Sign and orientation choices that fix every reported number. Readers
/// comparing against other conventions flip signs accordingly.
#[derive(Debug, Serialize)]
pub struct Conventions {
    /// R(X,Y) = [nabla_X, nabla_Y] - nabla_[X,Y].
    pub curvature_sign: &'static str,
    /// rho_1 = +n(d w1 + w2^w3), rho_2 = -n(d w2 + w3^w1),
    /// rho_3 = +n(d w3 - w1^w2) on a 4n-manifold.
    pub rho_domega_signs: [i32; 3],
    /// The J2 coefficient of [R, J3] is read as A1 = d w1 + w2^w3.
    pub rel1_j3_reading: &'static str,
    /// The volume orientation is the one that makes the fundamental
    /// 2-forms self-dual.
    pub orientation: &'static str,
}

impl Default for Conventions {
    fn default() -> Self {
        Conventions {
            curvature_sign: "commutator-minus-bracket",
            rho_domega_signs: [1, -1, 1],
            rel1_j3_reading: "A1",
            orientation: "fundamental-forms-self-dual",
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Versions {
    pub engine: &'static str,
    pub cli: &'static str,
    pub schema: &'static str,
}

#[derive(Debug, Serialize)]
pub struct ReportDocument {
    pub schema: &'static str,
    pub spec: SpecSummary,
    pub seed: u64,
    /// Tolerance ladder after `--tol-scale`.
    pub tolerances: Tolerances,
    pub conventions: Conventions,
    pub checks: Vec<CheckReport>,
    /// Sampled points where no frame could be built (pole, degenerate
    /// metric); indices refer to the sampling order for the fixed seed.
    pub skipped_points: Vec<String>,
    pub versions: Versions,
}

/// Run the requested checks (all applicable ones when `names` is empty) and
/// assemble the document.
pub fn build_document(
    spec: &ManifoldSpec,
    source: &str,
    names: &[String],
    opts: &CheckOptions,
) -> Result<ReportDocument, ChecksError> {
    let checks = run_checks(names, spec, opts)?;
    let count = opts.points.unwrap_or(spec.sample_points);
    let mut skipped_points = Vec::new();
    for (idx, p) in spec.sample(count, opts.seed).iter().enumerate() {
        if let Err(e) = spec.frame_at(p) {
            skipped_points.push(format!("point {idx} {p:?}: {e}"));
        }
    }
    Ok(ReportDocument {
        schema: SCHEMA,
        spec: SpecSummary {
            name: spec.name.clone(),
            source: source.to_string(),
            dimension: spec.dim,
            mode: match spec.mode {
                Mode::Chart => "chart",
                Mode::Frame => "frame",
            },
            connection: spec.connection.kind_name(),
            coords: spec.coords.clone(),
            sample_points: count,
            sample_box: spec.sample_box.clone(),
        },
        seed: opts.seed,
        tolerances: Tolerances::default().scaled(opts.tol_scale),
        conventions: Conventions::default(),
        checks,
        skipped_points,
        versions: Versions {
            engine: pqgeo_core::VERSION,
            cli: env!("CARGO_PKG_VERSION"),
            schema: SCHEMA,
        },
    })
}

/// Verdict of the whole document: any failure wins, then any inconclusive,
/// then holds. This is also the exit-code order.
pub fn overall_verdict(checks: &[CheckReport]) -> Verdict {
    let mut verdict = Verdict::Holds;
    for report in checks {
        match report.verdict {
            Verdict::Fails => return Verdict::Fails,
            Verdict::Inconclusive => verdict = Verdict::Inconclusive,
            Verdict::Holds => {}
        }
    }
    verdict
}

pub fn verdict_word(v: Verdict) -> &'static str {
    match v {
        Verdict::Holds => "holds",
        Verdict::Fails => "FAILS",
        Verdict::Inconclusive => "inconclusive",
    }
}

pub fn to_json(doc: &ReportDocument) -> String {
    let mut text = serde_json::to_string_pretty(doc).expect("document serializes");
    text.push('\n');
    text
}

/// Text table over the same data the JSON document carries.
pub fn render_table(doc: &ReportDocument) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{} ({}, dim {}, {} connection), seed {}",
        doc.spec.name, doc.spec.mode, doc.spec.dimension, doc.spec.connection, doc.seed
    )
    .unwrap();
    for check in &doc.checks {
        let worst = check
            .residuals
            .iter()
            .map(|s| s.max)
            .fold(0.0f64, f64::max);
        writeln!(
            out,
            "  {:<14} {:<13} worst residual {:9.3e}  tol {:7.1e}  points {}/{}",
            check.check,
            verdict_word(check.verdict),
            worst,
            check.tolerance,
            check.points_used,
            check.points_used + check.points_skipped,
        )
        .unwrap();
        for note in &check.notes {
            writeln!(out, "      note: {note}").unwrap();
        }
    }
    if !doc.skipped_points.is_empty() {
        writeln!(out, "  skipped points: {}", doc.skipped_points.len()).unwrap();
    }
    writeln!(
        out,
        "overall: {}",
        verdict_word(overall_verdict(&doc.checks))
    )
    .unwrap();
    out
}
