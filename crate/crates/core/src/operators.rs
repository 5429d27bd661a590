//! Pointwise checks of the block operators
//! `(E_k f)(z) = sum_{a in G_k} f(rho_a(z)) rho_a'(z)` on the outer annulus.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::blaschke::FiniteBlaschkeProduct;
use crate::error::Result;
use crate::monodromy::MonodromyResult;
use crate::nth_root::{
    all_local_inverses, build_branch, root_of_unity, AnnulusFrame, NthRootBranch,
};
use crate::zn::{
    dual_partition, eigenvalue_matrix, root_of_unity_sum, CyclotomicElement, ZnPartition,
};

/// Everything the block operators need: the product, its root branch, the
/// certified frame and the monodromy partition.
#[derive(Debug, Clone)]
pub struct OperatorContext {
    pub product: FiniteBlaschkeProduct,
    pub branch: NthRootBranch,
    pub frame: AnnulusFrame,
    pub partition: ZnPartition,
}

/// Local inverses at a point and at each of its images.
///
/// `at[a]` is `(rho_a(z), rho_a'(z))`; `nested[a][b]` is
/// `(rho_b(w), rho_b'(w))` at `w = rho_a(z)`, computed from its own fiber.
#[derive(Debug, Clone)]
pub struct InverseTable {
    pub z: Complex64,
    pub at: Vec<(Complex64, Complex64)>,
    pub nested: Vec<Vec<(Complex64, Complex64)>>,
}

impl OperatorContext {
    pub fn new(
        product: &FiniteBlaschkeProduct,
        frame: AnnulusFrame,
        partition: ZnPartition,
    ) -> Self {
        Self {
            branch: build_branch(product),
            product: product.clone(),
            frame,
            partition,
        }
    }

    pub fn from_analysis(product: &FiniteBlaschkeProduct, result: &MonodromyResult) -> Self {
        Self::new(product, result.frame, result.partition.clone())
    }

    pub fn n(&self) -> usize {
        self.product.order()
    }

    /// Seeded points in `R <= |z| <= (1 + R) / 2`, all inside the region.
    pub fn sample_points(&self, count: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r0 = self.frame.base_radius;
        let r1 = (1.0 + r0) / 2.0;
        (0..count)
            .map(|_| Complex64::from_polar(rng.gen_range(r0..r1), rng.gen_range(0.0..TAU)))
            .collect()
    }

    pub fn table(&self, z: Complex64) -> Result<InverseTable> {
        let at = all_local_inverses(&self.branch, &self.frame, z)?;
        let nested = at
            .iter()
            .map(|&(w, _)| all_local_inverses(&self.branch, &self.frame, w))
            .collect::<Result<Vec<_>>>()?;
        Ok(InverseTable { z, at, nested })
    }

    pub fn u(&self, z: Complex64) -> Result<Complex64> {
        self.branch.u_eval(z)
    }

    pub fn u_prime(&self, z: Complex64) -> Result<Complex64> {
        self.branch.u_derivative(z)
    }
}

/// `(E_G f)(z)` for a block `G` of labels.
pub fn apply_e<F>(ctx: &OperatorContext, block: &[usize], f: F, z: Complex64) -> Result<Complex64>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let inverses = all_local_inverses(&ctx.branch, &ctx.frame, z)?;
    block
        .iter()
        .map(|&a| Ok(f(inverses[a].0)? * inverses[a].1))
        .sum()
}

fn apply_from(
    values: &[(Complex64, Complex64)],
    block: &[usize],
    f: &dyn Fn(Complex64) -> Complex64,
) -> Complex64 {
    block.iter().map(|&a| f(values[a].0) * values[a].1).sum()
}

/// `(E_i E_j f)(z)` from a table: the inner operator is evaluated at every
/// `rho_a(z)` with the local inverses computed there.
fn apply_twice(
    t: &InverseTable,
    outer: &[usize],
    inner: &[usize],
    f: &dyn Fn(Complex64) -> Complex64,
) -> Complex64 {
    outer
        .iter()
        .map(|&a| apply_from(&t.nested[a], inner, f) * t.at[a].1)
        .sum()
}

/// Largest `|E_i E_j f - E_j E_i f|` over block pairs, `f = z^m` with
/// `m <= 6`, and the sample points.
pub fn verify_commutativity(ctx: &OperatorContext, samples: &[Complex64]) -> Result<f64> {
    let tables = samples
        .par_iter()
        .map(|&z| ctx.table(z))
        .collect::<Result<Vec<_>>>()?;
    Ok(commutativity_residual(ctx, &tables))
}

pub fn commutativity_residual(ctx: &OperatorContext, tables: &[InverseTable]) -> f64 {
    let blocks = &ctx.partition.blocks;
    tables
        .par_iter()
        .map(|t| {
            let mut worst = 0.0f64;
            for m in 0..=6 {
                let f = move |w: Complex64| w.powu(m);
                for (i, gi) in blocks.iter().enumerate() {
                    for gj in &blocks[i + 1..] {
                        let d = apply_twice(t, gi, gj, &f) - apply_twice(t, gj, gi, &f);
                        worst = worst.max(d.norm());
                    }
                }
            }
            worst
        })
        .reduce(|| 0.0, f64::max)
}

/// Largest `|rho_k(rho_k'(z)) - rho_{k+k'}(z)|`.
pub fn verify_composition_law(ctx: &OperatorContext, samples: &[Complex64]) -> Result<f64> {
    let tables = samples
        .par_iter()
        .map(|&z| ctx.table(z))
        .collect::<Result<Vec<_>>>()?;
    Ok(composition_residual(ctx.n(), &tables))
}

pub fn composition_residual(n: usize, tables: &[InverseTable]) -> f64 {
    tables
        .iter()
        .map(|t| {
            let mut worst = 0.0f64;
            for kp in 0..n {
                for k in 0..n {
                    let lhs = t.nested[kp][k].0;
                    let rhs = t.at[(k + kp) % n].0;
                    worst = worst.max((lhs - rhs).norm());
                }
            }
            worst
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenResiduals {
    /// Largest `|E_k f - c f| / max(1, |f|)` for `f = u^i u'`.
    pub relation: f64,
    /// Largest gap between pointwise eigenvalue estimates and exact table entries.
    pub eigenvalue: f64,
}

pub const EIGEN_EXPONENTS: std::ops::RangeInclusive<i32> = -3..=8;

/// Checks `E_k(u^i u') = (sum_{j in G_k} zeta^{j(i+1)}) u^i u'` for every
/// block and `i` in `-3..=8`.
pub fn verify_eigenrelation(
    ctx: &OperatorContext,
    samples: &[Complex64],
) -> Result<EigenResiduals> {
    let n = ctx.n();
    let dual = dual_partition(&ctx.partition);
    let table = eigenvalue_matrix(&ctx.partition, &dual);
    let dual_labels = dual.labels();
    let per_point = samples
        .par_iter()
        .map(|&z| -> Result<EigenResiduals> {
            let inv = all_local_inverses(&ctx.branch, &ctx.frame, z)?;
            let u_at: Vec<Complex64> = inv.iter().map(|&(w, _)| ctx.u(w)).collect::<Result<_>>()?;
            let du_at: Vec<Complex64> = inv
                .iter()
                .map(|&(w, _)| ctx.u_prime(w))
                .collect::<Result<_>>()?;
            let mut out = EigenResiduals {
                relation: 0.0,
                eigenvalue: 0.0,
            };
            for i in EIGEN_EXPONENTS {
                let f_here = u_at[0].powi(i) * du_at[0];
                let l = (i + 1).rem_euclid(n as i32) as usize;
                for (k, g) in ctx.partition.blocks.iter().enumerate() {
                    let lhs: Complex64 = g
                        .iter()
                        .map(|&a| u_at[a].powi(i) * du_at[a] * inv[a].1)
                        .sum();
                    let c: Complex64 = g.iter().map(|&a| root_of_unity((a * l) as i64, n)).sum();
                    out.relation = out
                        .relation
                        .max((lhs - c * f_here).norm() / f_here.norm().max(1.0));
                    let exact = table[k][dual_labels[l]].to_complex();
                    out.eigenvalue = out.eigenvalue.max((lhs / f_here - exact).norm());
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_point.into_iter().fold(
        EigenResiduals {
            relation: 0.0,
            eigenvalue: 0.0,
        },
        |a, b| EigenResiduals {
            relation: a.relation.max(b.relation),
            eigenvalue: a.eigenvalue.max(b.eigenvalue),
        },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubspaceEntry {
    pub dual_block: Vec<usize>,
    /// Residues `r` such that `u^i u'` with `i = r mod n` spans the subspace.
    pub exponent_residues: Vec<usize>,
    pub eigenvalues: Vec<CyclotomicElement>,
    pub eigenvalues_float: Vec<[f64; 2]>,
    pub distinguished: bool,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubspaceReport {
    pub n: usize,
    pub entries: Vec<SubspaceEntry>,
}

/// One entry per dual block. The entry holding `u^{n-1} u' = phi'/n`
/// (dual block `{0}`) is the distinguished one.
pub fn subspace_report(partition: &ZnPartition, dual: &ZnPartition) -> SubspaceReport {
    let n = partition.n;
    let table = eigenvalue_matrix(partition, dual);
    let entries = dual
        .blocks
        .iter()
        .enumerate()
        .map(|(j, block)| {
            let mut exponent_residues: Vec<usize> =
                block.iter().map(|&l| (l + n - 1) % n).collect();
            exponent_residues.sort_unstable();
            let eigenvalues: Vec<CyclotomicElement> =
                table.iter().map(|row| row[j].clone()).collect();
            let eigenvalues_float = eigenvalues
                .iter()
                .map(|c| {
                    let v = c.to_complex();
                    [v.re, v.im]
                })
                .collect();
            let residues: Vec<String> = exponent_residues.iter().map(|r| r.to_string()).collect();
            SubspaceEntry {
                dual_block: block.clone(),
                description: format!(
                    "closed span of u^i u' with i mod {n} in {{{}}}",
                    residues.join(",")
                ),
                exponent_residues,
                eigenvalues,
                eigenvalues_float,
                distinguished: block.contains(&0),
            }
        })
        .collect();
    SubspaceReport { n, entries }
}

/// `||z^k||^2` in the Bergman space of `r < |z| < 1`.
pub fn annulus_norm_sq(k: i32, r: f64) -> f64 {
    if k == -1 {
        TAU * (1.0 / r).ln()
    } else {
        PI * (1.0 - r.powi(2 * k + 2)) / (k + 1) as f64
    }
}

/// The sum `sum_{j in G} zeta^{j(i+1)}` as a float.
pub fn block_eigenvalue(block: &[usize], i: i32, n: usize) -> Complex64 {
    let l = (i + 1).rem_euclid(n as i32) as usize;
    root_of_unity_sum(block, l, n).to_complex()
}
