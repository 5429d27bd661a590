use std::io::Write;
use std::path::{Path, PathBuf};

use blaschke_core::analyze;
use blaschke_core::classifier::{classify_scenarios, enumerate_admissible, Classification};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{exit, CliError};
use crate::input::{load, Source};
use crate::report::{run_analysis, AnalysisReport, Options, VerifyReport};
use crate::svg;

#[derive(Debug, Parser)]
#[command(
    name = "blaschke",
    version,
    about = "Monodromy, reducibility and reducing subspaces of finite Blaschke products"
)]
pub struct Cli {
    /// Print nothing on stdout
    #[arg(short, long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the full pipeline on one product
    Analyze(RunArgs),
    /// List the admissible partitions of Z_n, grouped by scenario
    Classify {
        n: usize,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Report operator-identity and factorization residuals
    Verify(RunArgs),
    /// Draw the disk diagram as SVG
    Plot {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Product expression, e.g. "mobius(0.5)^2 @ z^4"
    #[arg(long)]
    pub expr: Option<String>,
    /// JSON file of zeros: [[re, im], ...] or {"zeros": [...], "factor": [re, im]}
    #[arg(long)]
    pub zeros: Option<PathBuf>,
    /// Order of a product with seeded random zeros
    #[arg(long)]
    pub random: Option<usize>,
    #[arg(long, default_value_t = crate::report::DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = crate::report::DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = crate::report::DEFAULT_SAMPLES)]
    pub samples: usize,
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Negative control: corrupt the labeling before verifying
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

impl InputArgs {
    fn load(&self) -> Result<Source, CliError> {
        load(
            self.expr.as_deref(),
            self.zeros.as_deref(),
            self.random,
            self.seed,
        )
    }
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    status: &'static str,
    code: &'static str,
    message: String,
    input: Option<&'a str>,
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

/// Writes the report to `path` and a summary to stdout, or the report to
/// stdout when no path is given.
fn emit(json: &str, path: Option<&Path>, summary: &str, quiet: bool) -> Result<(), CliError> {
    match path {
        Some(p) => {
            std::fs::write(p, json)?;
            if !quiet {
                print!("{summary}");
            }
        }
        None => {
            if !quiet {
                std::io::stdout().write_all(json.as_bytes())?;
            }
        }
    }
    Ok(())
}

pub fn classify_json(n: usize) -> Result<String, CliError> {
    to_json(&classify(n)?)
}

pub fn classify(n: usize) -> Result<Classification, CliError> {
    if n == 0 {
        return Err(CliError::Usage("n must be positive".into()));
    }
    let partitions = enumerate_admissible(n)?;
    Ok(classify_scenarios(n, &partitions))
}

fn analysis_summary(r: &AnalysisReport) -> String {
    let mut s = format!(
        "{}: order {}, partition {}, dual {}, q = {}, {}\n",
        r.input,
        r.order,
        r.partition_text,
        r.dual_text,
        r.q,
        if r.reducible {
            "reducible"
        } else {
            "irreducible"
        }
    );
    for f in &r.failures {
        s.push_str(&format!("  failed: {f}\n"));
    }
    s.push_str(&format!("{}\n", r.status));
    s
}

fn verify_summary(r: &VerifyReport) -> String {
    let v = &r.residuals;
    let mut s = format!(
        "{}: {} samples, tol {:.1e}\n  commutativity {:.3e}\n  composition   {:.3e}\n  eigenrelation {:.3e}\n  eigenvalues   {:.3e}\n",
        r.input, v.samples, v.tol, v.commutativity, v.composition, v.eigenrelation, v.eigenvalue
    );
    for f in &r.factorizations {
        match f.residual {
            Some(res) => s.push_str(&format!("  factor {:?}: {res:.3e}\n", f.subgroup)),
            None => s.push_str(&format!(
                "  factor {:?}: {}\n",
                f.subgroup,
                f.error.as_deref().unwrap_or("failed")
            )),
        }
    }
    for f in &r.failures {
        s.push_str(&format!("  failed: {f}\n"));
    }
    s.push_str(&format!("{}\n", r.status));
    s
}

fn run_pipeline(args: &RunArgs, verify: bool, quiet: bool) -> Result<i32, CliError> {
    let source = args.input.load()?;
    let opts = Options {
        seed: args.input.seed,
        samples: args.samples,
        tol: args.tol,
        inject_fault: args.inject_fault,
    };
    let outcome = run_analysis(&source, &opts);
    let report = match outcome {
        Ok(r) => r,
        Err(e) => {
            let json = to_json(&ErrorReport {
                status: "ERROR",
                code: e.code(),
                message: e.to_string(),
                input: Some(&source.description),
            })?;
            emit(&json, args.json.as_deref(), "", true)?;
            return Err(e);
        }
    };
    if verify {
        let v = VerifyReport::from(&report);
        emit(
            &to_json(&v)?,
            args.json.as_deref(),
            &verify_summary(&v),
            quiet,
        )?;
    } else {
        emit(
            &to_json(&report)?,
            args.json.as_deref(),
            &analysis_summary(&report),
            quiet,
        )?;
    }
    Ok(report.status.exit_code())
}

/// Runs a parsed command; the result is the process exit code.
pub fn execute(cli: &Cli) -> Result<i32, CliError> {
    match &cli.command {
        Command::Analyze(args) => run_pipeline(args, false, cli.quiet),
        Command::Verify(args) => run_pipeline(args, true, cli.quiet),
        Command::Classify { n, json } => {
            let c = classify(*n)?;
            let summary = format!(
                "n = {n}: {} admissible partitions in {} scenarios\n",
                c.entries.len(),
                c.scenarios.len()
            );
            emit(&to_json(&c)?, json.as_deref(), &summary, cli.quiet)?;
            Ok(exit::PASS)
        }
        Command::Plot { input, svg: path } => {
            let source = input.load()?;
            let result = analyze(&source.product)?;
            let picture = svg::render(&source.product, &result);
            match path {
                Some(p) => std::fs::write(p, picture)?,
                None if !cli.quiet => std::io::stdout().write_all(picture.as_bytes())?,
                None => {}
            }
            Ok(exit::PASS)
        }
    }
}
