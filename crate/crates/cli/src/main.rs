//! `pqgeo`: check almost para-quaternionic structures described by spec
//! files, inspect the built-in catalog, and cross-check derived tensors
//! against a finite-difference oracle.
//!
//! Exit codes: 0 every requested check holds, 1 at least one fails,
//! 2 at least one is inconclusive (and none fail), 3 input error.

mod report;
mod specfile;

use clap::{Parser, Subcommand};
use pqgeo_core::catalog::{catalog_entries, catalog_get};
use pqgeo_core::checks::{CheckOptions, Verdict};
use pqgeo_core::geometry::{ManifoldSpec, Mode};
use pqgeo_core::oracle::{compare_at, OracleQuantity};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "pqgeo",
    version,
    about = "Numerical checks for almost para-quaternionic structures"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run integrability/equivalence checks at sampled points.
    Check {
        /// Manifold spec file.
        #[arg(long, value_name = "FILE")]
        spec: PathBuf,
        /// Comma-separated check names (default: every applicable check).
        #[arg(long, value_delimiter = ',', value_name = "NAMES")]
        checks: Vec<String>,
        /// Override the spec's sample-point count.
        #[arg(long, value_name = "N")]
        points: Option<usize>,
        /// Seed for point and structure sampling.
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Multiply every tolerance by this factor.
        #[arg(long, default_value_t = 1.0, value_name = "X")]
        tol_scale: f64,
        /// Also write the JSON report document to this file.
        #[arg(long, value_name = "FILE")]
        json: Option<PathBuf>,
    },
    /// Show a built-in example (omit the name to list them all).
    Example {
        /// Catalog entry name.
        name: Option<String>,
        /// Print the entry as a spec file on stdout.
        #[arg(long)]
        emit_spec: bool,
    },
    /// Compare jet-computed quantities against central finite differences.
    /// Reports deviations; never judges them.
    Oracle {
        /// Manifold spec file (chart mode).
        #[arg(long, value_name = "FILE")]
        spec: PathBuf,
        /// One of: gamma, riemann, nijenhuis, nablaJ, weyl.
        #[arg(long, value_name = "Q")]
        quantity: String,
        /// Point coordinates, space- or comma-separated
        /// (default: the sample-box center).
        #[arg(long, value_name = "COORDS")]
        point: Option<String>,
        /// Finite-difference step.
        #[arg(long, default_value_t = 1e-5, value_name = "H")]
        step: f64,
    },
}

const EXIT_HOLDS: i32 = 0;
const EXIT_FAILS: i32 = 1;
const EXIT_INCONCLUSIVE: i32 = 2;
const EXIT_INPUT: i32 = 3;

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version land here too; only real usage errors
            // count as input errors.
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_HOLDS };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Check {
            spec,
            checks,
            points,
            seed,
            tol_scale,
            json,
        } => cmd_check(&spec, &checks, points, seed, tol_scale, json.as_deref()),
        Command::Example { name, emit_spec } => cmd_example(name.as_deref(), emit_spec),
        Command::Oracle {
            spec,
            quantity,
            point,
            step,
        } => cmd_oracle(&spec, &quantity, point.as_deref(), step),
    }
}

fn input_error(msg: impl std::fmt::Display) -> i32 {
    eprintln!("error: {msg}");
    EXIT_INPUT
}

fn load(path: &Path) -> Result<ManifoldSpec, i32> {
    specfile::load_spec(path).map_err(|e| input_error(e))
}

fn cmd_check(
    spec_path: &Path,
    checks: &[String],
    points: Option<usize>,
    seed: u64,
    tol_scale: f64,
    json: Option<&Path>,
) -> i32 {
    let spec = match load(spec_path) {
        Ok(s) => s,
        Err(code) => return code,
    };
    if !(tol_scale.is_finite() && tol_scale > 0.0) {
        return input_error("--tol-scale must be a positive number");
    }
    let opts = CheckOptions {
        points,
        seed,
        tol_scale,
        ..CheckOptions::default()
    };
    let source = format!("file:{}", spec_path.display());
    let doc = match report::build_document(&spec, &source, checks, &opts) {
        Ok(doc) => doc,
        Err(e) => return input_error(e),
    };
    if let Some(path) = json {
        if let Err(e) = std::fs::write(path, report::to_json(&doc)) {
            return input_error(format_args!("writing {}: {e}", path.display()));
        }
    }
    print!("{}", report::render_table(&doc));
    match report::overall_verdict(&doc.checks) {
        Verdict::Holds => EXIT_HOLDS,
        Verdict::Fails => EXIT_FAILS,
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

fn cmd_example(name: Option<&str>, emit_spec: bool) -> i32 {
    let Some(name) = name else {
        for entry in catalog_entries() {
            println!("{:<18} {}", entry.name, entry.summary);
        }
        return EXIT_HOLDS;
    };
    let entry = match catalog_get(name) {
        Ok(e) => e,
        Err(e) => return input_error(e),
    };
    if emit_spec {
        print!("{}", specfile::emit_spec(&entry.spec));
        return EXIT_HOLDS;
    }
    let mode = match entry.spec.mode {
        Mode::Chart => "chart",
        Mode::Frame => "frame",
    };
    println!("{}", entry.name);
    println!("  {}", entry.summary);
    println!(
        "  dimension {}, {mode} mode, {} connection, {} sample points",
        entry.spec.dim,
        entry.spec.connection.kind_name(),
        entry.spec.sample_points
    );
    println!("  expected verdicts:");
    for (check, verdict) in &entry.expected {
        println!("    {:<14} {}", check, report::verdict_word(*verdict));
    }
    EXIT_HOLDS
}

fn parse_point(text: &str, dim: usize) -> Result<Vec<f64>, String> {
    let coords = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| format!("bad coordinate `{t}` in --point"))
        })
        .collect::<Result<Vec<f64>, String>>()?;
    if coords.len() != dim {
        return Err(format!(
            "--point needs {dim} coordinates, got {}",
            coords.len()
        ));
    }
    Ok(coords)
}

fn cmd_oracle(spec_path: &Path, quantity: &str, point: Option<&str>, step: f64) -> i32 {
    let spec = match load(spec_path) {
        Ok(s) => s,
        Err(code) => return code,
    };
    if spec.mode != Mode::Chart {
        return input_error("the oracle needs a chart-mode spec (frame data has no stencil)");
    }
    let Some(quantity) = OracleQuantity::parse(quantity) else {
        let known: Vec<&str> = OracleQuantity::ALL.iter().map(|q| q.name()).collect();
        return input_error(format_args!(
            "unknown quantity `{quantity}`; known: {}",
            known.join(", ")
        ));
    };
    if !(step.is_finite() && step > 0.0) {
        return input_error("--step must be a positive number");
    }
    let point = match point {
        None => spec.box_center(),
        Some(text) => match parse_point(text, spec.dim) {
            Ok(p) => p,
            Err(msg) => return input_error(msg),
        },
    };
    match compare_at(&spec, &point, quantity, step) {
        Ok(cmp) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&cmp).expect("comparison serializes")
            );
            EXIT_HOLDS
        }
        Err(e) => input_error(e),
    }
}
