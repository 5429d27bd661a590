//! Where a product comes from: an expression, a zeros file, or seeded
//! random zeros.

use std::f64::consts::TAU;
use std::path::Path;

use blaschke_core::FiniteBlaschkeProduct;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::CliError;
use crate::expr::parse_expr;

/// Zeros of random products are drawn uniformly (by area) from this disk.
pub const RANDOM_ZERO_RADIUS: f64 = 0.9;

/// Either a bare array of `[re, im]` pairs, or an object with the zeros and
/// an optional unimodular factor.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ZerosFile {
    Bare(Vec<[f64; 2]>),
    WithFactor {
        zeros: Vec<[f64; 2]>,
        factor: Option<[f64; 2]>,
    },
}

pub fn parse_zeros_json(text: &str) -> Result<FiniteBlaschkeProduct, CliError> {
    let parsed: ZerosFile = serde_json::from_str(text)
        .map_err(|e| CliError::Usage(format!("malformed zeros file: {e}")))?;
    let (zeros, factor) = match parsed {
        ZerosFile::Bare(z) => (z, None),
        ZerosFile::WithFactor { zeros, factor } => (zeros, factor),
    };
    let zeros: Vec<Complex64> = zeros
        .iter()
        .map(|&[re, im]| Complex64::new(re, im))
        .collect();
    let factor = factor.map_or(Complex64::new(1.0, 0.0), |[re, im]| Complex64::new(re, im));
    if zeros.is_empty() {
        return Err(CliError::Usage(
            "a zeros file needs at least one zero".into(),
        ));
    }
    if (factor.norm() - 1.0).abs() > 1e-9 {
        return Err(CliError::Usage(format!(
            "factor {factor} is not unimodular"
        )));
    }
    Ok(FiniteBlaschkeProduct::new(zeros, factor / factor.norm())?)
}

pub fn read_zeros_file(path: &Path) -> Result<FiniteBlaschkeProduct, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    parse_zeros_json(&text)
}

/// `n` seeded zeros, uniform in the disk of radius [`RANDOM_ZERO_RADIUS`],
/// and a seeded unimodular factor.
pub fn random_product(n: usize, seed: u64) -> FiniteBlaschkeProduct {
    random_product_within(n, seed, RANDOM_ZERO_RADIUS)
}

/// Like [`random_product`] with zeros uniform in the disk of radius `radius`.
pub fn random_product_within(n: usize, seed: u64, radius: f64) -> FiniteBlaschkeProduct {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zeros = (0..n)
        .map(|_| {
            let r = radius * rng.gen::<f64>().sqrt();
            Complex64::from_polar(r, rng.gen_range(0.0..TAU))
        })
        .collect();
    let factor = Complex64::from_polar(1.0, rng.gen_range(0.0..TAU));
    FiniteBlaschkeProduct::new(zeros, factor).expect("random zeros stay inside the disk")
}

/// A product together with the text it was read from.
#[derive(Debug, Clone)]
pub struct Source {
    pub description: String,
    pub product: FiniteBlaschkeProduct,
}

pub fn load(
    expr: Option<&str>,
    zeros: Option<&Path>,
    random: Option<usize>,
    seed: u64,
) -> Result<Source, CliError> {
    match (expr, zeros, random) {
        (Some(text), None, None) => {
            let e = parse_expr(text)?;
            Ok(Source {
                description: e.to_string(),
                product: e.to_product()?,
            })
        }
        (None, Some(path), None) => Ok(Source {
            description: format!("zeros from {}", path.display()),
            product: read_zeros_file(path)?,
        }),
        (None, None, Some(n)) if n >= 1 => Ok(Source {
            description: format!("random order {n}, seed {seed}"),
            product: random_product(n, seed),
        }),
        (None, None, Some(_)) => Err(CliError::Usage("--random needs a positive order".into())),
        _ => Err(CliError::Usage(
            "give exactly one of --expr, --zeros and --random".into(),
        )),
    }
}
