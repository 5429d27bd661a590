//! Finite Blaschke products and disk Möbius factors.
//!
//! A product of order `n` is stored as its zeros (repeated by multiplicity)
//! and a unimodular factor `c`, with
//! `phi(z) = c * prod (a_i - z) / (1 - conj(a_i) z)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polyroots::{self, fiber};

/// Default margin keeping zeros away from the unit circle.
pub const DEFAULT_DISK_MARGIN: f64 = 1e-3;
/// Evaluation points closer than this to a pole are rejected.
pub const POLE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteBlaschkeProduct {
    zeros: Vec<Complex64>,
    factor: Complex64,
    margin: f64,
}

/// Numerator and denominator polynomials (ascending coefficients).
#[derive(Debug, Clone, PartialEq)]
pub struct RationalForm {
    pub numerator: Vec<Complex64>,
    pub denominator: Vec<Complex64>,
}

impl RationalForm {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        polyroots::eval(&self.numerator, z) / polyroots::eval(&self.denominator, z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalPoint {
    pub point: Complex64,
    pub multiplicity: usize,
}

impl FiniteBlaschkeProduct {
    pub fn new(zeros: Vec<Complex64>, factor: Complex64) -> Result<Self> {
        Self::with_margin(zeros, factor, DEFAULT_DISK_MARGIN)
    }

    pub fn with_margin(zeros: Vec<Complex64>, factor: Complex64, margin: f64) -> Result<Self> {
        if zeros.is_empty() {
            return Err(Error::InvalidInput(
                "a Blaschke product needs at least one zero".into(),
            ));
        }
        if !(margin > 0.0 && margin < 1.0) {
            return Err(Error::InvalidInput(format!(
                "disk margin {margin} must lie in (0, 1)"
            )));
        }
        if (factor.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "factor {factor} is not unimodular"
            )));
        }
        for &a in &zeros {
            if !a.re.is_finite() || !a.im.is_finite() || a.norm() > 1.0 - margin {
                return Err(Error::DiskMargin { zero: a, margin });
            }
        }
        Ok(Self {
            zeros,
            factor: factor / factor.norm(),
            margin,
        })
    }

    /// `z^k`; the factor `(-1)^k` compensates the `(0 - z)` convention.
    pub fn z_power(k: usize) -> Self {
        assert!(k >= 1, "z^0 is not a Blaschke product");
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        Self {
            zeros: vec![Complex64::new(0.0, 0.0); k],
            factor: Complex64::new(sign, 0.0),
            margin: DEFAULT_DISK_MARGIN,
        }
    }

    /// The disk automorphism `(a - z) / (1 - conj(a) z)`.
    pub fn moebius(a: Complex64) -> Result<Self> {
        Self::new(vec![a], Complex64::new(1.0, 0.0))
    }

    pub fn order(&self) -> usize {
        self.zeros.len()
    }

    pub fn zeros(&self) -> &[Complex64] {
        &self.zeros
    }

    pub fn factor(&self) -> Complex64 {
        self.factor
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    /// Pointwise product.
    pub fn product(&self, other: &Self) -> Self {
        let mut zeros = self.zeros.clone();
        zeros.extend_from_slice(&other.zeros);
        Self {
            zeros,
            factor: self.factor * other.factor,
            margin: self.margin.min(other.margin),
        }
    }

    pub fn power(&self, k: usize) -> Self {
        assert!(k >= 1);
        let mut out = self.clone();
        for _ in 1..k {
            out = out.product(self);
        }
        out
    }

    pub fn with_factor(&self, factor: Complex64) -> Result<Self> {
        Self::with_margin(self.zeros.clone(), factor, self.margin)
    }

    fn check_pole(&self, z: Complex64) -> Result<()> {
        if self
            .zeros
            .iter()
            .any(|a| (Complex64::new(1.0, 0.0) - a.conj() * z).norm() < POLE_TOL)
        {
            return Err(Error::PoleProximity(z));
        }
        Ok(())
    }

    /// The product without its unimodular factor.
    fn bare(&self, z: Complex64) -> Complex64 {
        self.zeros
            .iter()
            .map(|&a| (a - z) / (Complex64::new(1.0, 0.0) - a.conj() * z))
            .product()
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        self.check_pole(z)?;
        Ok(self.factor * self.bare(z))
    }

    /// `phi'(z)` by the product rule, valid at zeros as well.
    pub fn derivative(&self, z: Complex64) -> Result<Complex64> {
        self.check_pole(z)?;
        let one = Complex64::new(1.0, 0.0);
        let factors: Vec<Complex64> = self
            .zeros
            .iter()
            .map(|&a| (a - z) / (one - a.conj() * z))
            .collect();
        let n = factors.len();
        let mut prefix = vec![one; n + 1];
        for i in 0..n {
            prefix[i + 1] = prefix[i] * factors[i];
        }
        let mut suffix = one;
        let mut sum = Complex64::new(0.0, 0.0);
        for i in (0..n).rev() {
            let a = self.zeros[i];
            let d = one - a.conj() * z;
            let df = (a.norm_sqr() - 1.0) / (d * d);
            sum += prefix[i] * df * suffix;
            suffix *= factors[i];
        }
        Ok(self.factor * sum)
    }

    /// `phi'(z) / phi(z)`; undefined at zeros.
    pub fn log_derivative(&self, z: Complex64) -> Result<Complex64> {
        self.check_pole(z)?;
        let one = Complex64::new(1.0, 0.0);
        let mut sum = Complex64::new(0.0, 0.0);
        for &a in &self.zeros {
            let num = a - z;
            if num.norm() < POLE_TOL {
                return Err(Error::InvalidInput(format!("log derivative at zero {a}")));
            }
            sum += (a.norm_sqr() - 1.0) / (num * (one - a.conj() * z));
        }
        Ok(sum)
    }

    /// `P = c prod (a_i - z)`, `Q = prod (1 - conj(a_i) z)`.
    pub fn rational_form(&self) -> RationalForm {
        let one = Complex64::new(1.0, 0.0);
        let mut numerator = vec![self.factor];
        let mut denominator = vec![one];
        for &a in &self.zeros {
            numerator = polyroots::mul(&numerator, &[a, -one]);
            denominator = polyroots::mul(&denominator, &[one, -a.conj()]);
        }
        RationalForm {
            numerator,
            denominator,
        }
    }

    /// `outer ∘ inner`. Zeros are the fibers of `inner` over the zeros of
    /// `outer`; the factor is fixed by matching one evaluation.
    pub fn compose(&self, inner: &Self) -> Result<Self> {
        let mut zeros = Vec::with_capacity(self.order() * inner.order());
        for &b in &self.zeros {
            zeros.extend(fiber(inner, b)?.points);
        }
        let margin = self.margin.min(inner.margin);
        let candidate = Self::with_margin(zeros, Complex64::new(1.0, 0.0), margin)?;
        let probes = [
            Complex64::new(0.0, 0.0),
            Complex64::new(0.5, 0.0),
            Complex64::new(0.0, 0.5),
            Complex64::new(-0.5, 0.0),
            Complex64::new(0.0, -0.5),
            Complex64::new(0.3, 0.4),
        ];
        let (z, bare) = probes
            .iter()
            .map(|&z| (z, candidate.bare(z)))
            .max_by(|a, b| a.1.norm().partial_cmp(&b.1.norm()).unwrap())
            .unwrap();
        let target = self.eval(inner.eval(z)?)?;
        let factor = target / bare;
        candidate.with_factor(factor / factor.norm())
    }

    /// The `n - 1` critical points in the open disk, with multiplicity.
    ///
    /// They are the disk roots of `P'Q - PQ'`; the remaining roots are their
    /// reflections across the unit circle. Order-one products have none.
    pub fn critical_points(&self) -> Result<Vec<CriticalPoint>> {
        let n = self.order();
        if n < 2 {
            return Ok(Vec::new());
        }
        let form = self.rational_form();
        let dp = polyroots::derivative(&form.numerator);
        let dq = polyroots::derivative(&form.denominator);
        let poly = polyroots::sub(
            &polyroots::mul(&dp, &form.denominator),
            &polyroots::mul(&form.numerator, &dq),
        );
        let roots = polyroots::poly_roots(&poly)?;
        let inside: Vec<CriticalPoint> = polyroots::cluster_roots(&poly, &roots)
            .into_iter()
            .filter(|(c, _)| c.norm() < 1.0)
            .map(|(point, multiplicity)| CriticalPoint {
                point,
                multiplicity,
            })
            .collect();
        let count: usize = inside.iter().map(|c| c.multiplicity).sum();
        if count != n - 1 {
            return Err(Error::RootFindingFailure(format!(
                "found {count} critical points in the disk, expected {}",
                n - 1
            )));
        }
        Ok(inside)
    }
}
