//! The analysis pipeline behind `analyze` and `verify`, and its JSON report.

use blaschke_core::blaschke::CriticalPoint;
use blaschke_core::decompose::{factor_from_subgroup, FACTOR_TOL};
use blaschke_core::monodromy::{orbit_partition, Permutation};
use blaschke_core::nth_root::AnnulusFrame;
use blaschke_core::operators::{
    commutativity_residual, composition_residual, subspace_report, verify_eigenrelation,
    InverseTable, OperatorContext, SubspaceReport,
};
use blaschke_core::zn::{
    check_alpha0, check_alpha1, check_alpha2, check_alpha3, dual_partition, eigenvalue_matrix,
    subgroup_unions, Check, SubgroupUnion,
};
use blaschke_core::{analyze, FiniteBlaschkeProduct, ZnPartition};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::CliError;
use crate::input::Source;

pub const DEFAULT_SAMPLES: usize = 50;
pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Clone, Copy)]
pub struct Options {
    pub seed: u64,
    pub samples: usize,
    pub tol: f64,
    /// Corrupts the labeling of the local inverses and one monodromy
    /// generator; every check downstream should then fail.
    pub inject_fault: bool,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            samples: DEFAULT_SAMPLES,
            tol: DEFAULT_TOL,
            inject_fault: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Pass,
    Failed,
    LowConfidence,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Failed => "FAILED",
            Status::LowConfidence => "LOW_CONFIDENCE",
        })
    }
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => crate::error::exit::PASS,
            Status::Failed => crate::error::exit::FAILED,
            Status::LowConfidence => crate::error::exit::LOW_CONFIDENCE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CyclotomicEntry {
    pub coeffs: Vec<i64>,
    pub value: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaFlags {
    pub alpha0: bool,
    pub alpha1: bool,
    pub alpha2: bool,
    pub alpha3: bool,
    pub violations: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductSummary {
    pub order: usize,
    pub zeros: Vec<Complex64>,
    pub factor: Complex64,
}

impl From<&FiniteBlaschkeProduct> for ProductSummary {
    fn from(p: &FiniteBlaschkeProduct) -> Self {
        Self {
            order: p.order(),
            zeros: p.zeros().to_vec(),
            factor: p.factor(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorizationReport {
    pub subgroup: Vec<usize>,
    pub outer_order: usize,
    pub inner_order: usize,
    pub outer: Option<ProductSummary>,
    pub inner: Option<ProductSummary>,
    pub residual: Option<f64>,
    pub passed: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Residuals {
    pub seed: u64,
    pub samples: usize,
    pub tol: f64,
    pub commutativity: f64,
    pub composition: f64,
    pub eigenrelation: f64,
    pub eigenvalue: f64,
}

impl Residuals {
    fn failures(&self) -> Vec<String> {
        [
            ("commutativity", self.commutativity),
            ("composition law", self.composition),
            ("eigenrelation", self.eigenrelation),
            ("eigenvalue table", self.eigenvalue),
        ]
        .into_iter()
        .filter(|&(_, r)| !(r < self.tol))
        .map(|(name, r)| format!("{name} residual {r:.3e} is not below {:.1e}", self.tol))
        .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub input: String,
    pub status: Status,
    pub failures: Vec<String>,
    pub order: usize,
    pub factor: Complex64,
    pub zeros: Vec<Complex64>,
    pub critical_points: Vec<CriticalPoint>,
    pub critical_values: Vec<Complex64>,
    pub branch_locus: Vec<Complex64>,
    pub min_separation: Option<f64>,
    pub low_confidence: bool,
    pub frame: AnnulusFrame,
    pub generators: Vec<String>,
    pub partition: ZnPartition,
    pub partition_text: String,
    pub dual: ZnPartition,
    pub dual_text: String,
    pub q: usize,
    pub dual_q: usize,
    pub alpha: AlphaFlags,
    /// Rows are partition blocks, columns dual blocks.
    pub eigenvalue_table: Vec<Vec<CyclotomicEntry>>,
    pub subspaces: SubspaceReport,
    pub reducible: bool,
    pub subgroup_unions: Vec<SubgroupUnion>,
    pub factorizations: Vec<FactorizationReport>,
    pub verification: Residuals,
}

/// The part of a report that does not depend on floating-point noise.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteSummary {
    pub status: Status,
    pub order: usize,
    pub critical_point_count: usize,
    pub branch_locus_size: usize,
    pub partition: String,
    pub dual: String,
    pub q: usize,
    pub dual_q: usize,
    pub alpha: [bool; 4],
    pub eigenvalue_table: Vec<Vec<Vec<i64>>>,
    pub distinguished_residues: Vec<usize>,
    pub reducible: bool,
    pub subgroup_unions: Vec<Vec<usize>>,
    pub factorizations: Vec<(usize, usize, bool)>,
}

impl AnalysisReport {
    pub fn discrete(&self) -> DiscreteSummary {
        DiscreteSummary {
            status: self.status,
            order: self.order,
            critical_point_count: self.critical_points.iter().map(|c| c.multiplicity).sum(),
            branch_locus_size: self.branch_locus.len(),
            partition: self.partition_text.clone(),
            dual: self.dual_text.clone(),
            q: self.q,
            dual_q: self.dual_q,
            alpha: [
                self.alpha.alpha0,
                self.alpha.alpha1,
                self.alpha.alpha2,
                self.alpha.alpha3,
            ],
            eigenvalue_table: self
                .eigenvalue_table
                .iter()
                .map(|row| row.iter().map(|e| e.coeffs.clone()).collect())
                .collect(),
            distinguished_residues: self
                .subspaces
                .entries
                .iter()
                .find(|e| e.distinguished)
                .map(|e| e.exponent_residues.clone())
                .unwrap_or_default(),
            reducible: self.reducible,
            subgroup_unions: self
                .subgroup_unions
                .iter()
                .map(|s| s.elements.clone())
                .collect(),
            factorizations: self
                .factorizations
                .iter()
                .map(|f| (f.outer_order, f.inner_order, f.passed))
                .collect(),
        }
    }
}

fn alpha_flags(p: &ZnPartition) -> AlphaFlags {
    let checks: [Check; 4] = [
        check_alpha0(p),
        check_alpha1(p),
        check_alpha2(p),
        check_alpha3(p),
    ];
    AlphaFlags {
        alpha0: checks[0].is_ok(),
        alpha1: checks[1].is_ok(),
        alpha2: checks[2].is_ok(),
        alpha3: checks[3].is_ok(),
        violations: checks
            .iter()
            .filter_map(|c| c.as_ref().err().map(|v| v.to_string()))
            .collect(),
    }
}

/// Relabels the local inverses by a transposition of two labels.
fn corrupt_table(t: &mut InverseTable, a: usize, b: usize) {
    t.at.swap(a, b);
    t.nested.swap(a, b);
    for row in &mut t.nested {
        row.swap(a, b);
    }
}

fn fault_labels(n: usize) -> (usize, usize) {
    if n >= 3 {
        (1, 2)
    } else {
        (0, n - 1)
    }
}

fn factorization(ctx: &OperatorContext, union: &SubgroupUnion) -> FactorizationReport {
    let n = ctx.n();
    let m = union.elements.len();
    let base = FactorizationReport {
        subgroup: union.elements.clone(),
        outer_order: n / m,
        inner_order: m,
        outer: None,
        inner: None,
        residual: None,
        passed: false,
        error: None,
    };
    match factor_from_subgroup(ctx, &union.elements) {
        Ok(f) => FactorizationReport {
            outer: Some((&f.outer).into()),
            inner: Some((&f.inner).into()),
            residual: Some(f.residual),
            passed: f.passed(),
            ..base
        },
        Err(e) => FactorizationReport {
            error: Some(format!("{}: {e}", e.code())),
            ..base
        },
    }
}

pub fn run_analysis(source: &Source, opts: &Options) -> Result<AnalysisReport, CliError> {
    let phi = &source.product;
    let n = phi.order();
    let result = analyze(phi)?;

    let mut generators = result.generators.clone();
    if opts.inject_fault && n >= 2 {
        let (a, b) = fault_labels(n);
        let mut sigma = Permutation::identity(n).0;
        sigma.swap(a, b);
        generators.push(Permutation(sigma));
    }
    let partition = orbit_partition(&generators, n);
    let dual = dual_partition(&partition);
    let alpha = alpha_flags(&partition);

    let ctx = OperatorContext::new(phi, result.frame, partition.clone());
    let samples = ctx.sample_points(opts.samples, opts.seed);
    let mut tables = samples
        .iter()
        .map(|&z| ctx.table(z))
        .collect::<blaschke_core::Result<Vec<_>>>()?;
    if opts.inject_fault && n >= 2 {
        let (a, b) = fault_labels(n);
        for t in &mut tables {
            corrupt_table(t, a, b);
        }
    }
    let eigen = verify_eigenrelation(&ctx, &samples)?;
    let verification = Residuals {
        seed: opts.seed,
        samples: opts.samples,
        tol: opts.tol,
        commutativity: commutativity_residual(&ctx, &tables),
        composition: composition_residual(n, &tables),
        eigenrelation: eigen.relation,
        eigenvalue: eigen.eigenvalue,
    };

    let unions = subgroup_unions(&partition);
    let factorizations: Vec<FactorizationReport> = unions
        .iter()
        .filter(|u| !u.trivial)
        .map(|u| factorization(&ctx, u))
        .collect();

    let mut failures = Vec::new();
    failures.extend(alpha.violations.iter().cloned());
    if partition.q() != dual.q() {
        failures.push(format!(
            "count equality fails: {} blocks but {} dual blocks",
            partition.q(),
            dual.q()
        ));
    }
    failures.extend(verification.failures());
    for f in &factorizations {
        if !f.passed {
            failures.push(match (&f.error, f.residual) {
                (Some(e), _) => format!("factorization over {:?}: {e}", f.subgroup),
                (None, Some(r)) => format!(
                    "factorization over {:?} has residual {r:.3e}, not below {FACTOR_TOL:.0e}",
                    f.subgroup
                ),
                (None, None) => format!("factorization over {:?} failed", f.subgroup),
            });
        }
    }
    let status = if !failures.is_empty() {
        Status::Failed
    } else if result.low_confidence {
        Status::LowConfidence
    } else {
        Status::Pass
    };

    let table = eigenvalue_matrix(&partition, &dual)
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|c| CyclotomicEntry {
                    value: c.to_complex(),
                    coeffs: c.coeffs,
                })
                .collect()
        })
        .collect();
    let separation = result.locus.min_separation();

    Ok(AnalysisReport {
        input: source.description.clone(),
        status,
        failures,
        order: n,
        factor: phi.factor(),
        zeros: phi.zeros().to_vec(),
        critical_points: result.locus.critical_points.clone(),
        critical_values: result.locus.critical_values.clone(),
        branch_locus: result.locus.points.clone(),
        min_separation: separation.is_finite().then_some(separation),
        low_confidence: result.low_confidence,
        frame: result.frame,
        generators: generators.iter().map(|g| g.to_string()).collect(),
        partition_text: partition.to_string(),
        dual_text: dual.to_string(),
        q: partition.q(),
        dual_q: dual.q(),
        subspaces: subspace_report(&partition, &dual),
        alpha,
        eigenvalue_table: table,
        reducible: !factorizations.is_empty(),
        subgroup_unions: unions,
        factorizations,
        verification,
        partition,
        dual,
    })
}

/// What `verify` prints: the residuals and the factorization round trips.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub input: String,
    pub status: Status,
    pub failures: Vec<String>,
    pub partition: String,
    pub q: usize,
    pub residuals: Residuals,
    pub factorizations: Vec<FactorizationReport>,
}

impl From<&AnalysisReport> for VerifyReport {
    fn from(r: &AnalysisReport) -> Self {
        Self {
            input: r.input.clone(),
            status: r.status,
            failures: r.failures.clone(),
            partition: r.partition_text.clone(),
            q: r.q,
            residuals: r.verification.clone(),
            factorizations: r.factorizations.clone(),
        }
    }
}
