//! Recovering a factorization `phi = phi1 ∘ phi2` from a subgroup `H` of
//! labels that is a union of monodromy blocks: `phi2` is the product of the
//! local inverses in `H`, and `phi1` is read off from `phi` along `phi2`.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::blaschke::{FiniteBlaschkeProduct, RationalForm};
use crate::error::{Error, Result};
use crate::nth_root::all_local_inverses;
use crate::operators::OperatorContext;
use crate::polyroots::{self, poly_roots};

/// Smallest accepted ratio of extreme singular values in a fit.
pub const FIT_CONDITION: f64 = 1e-10;
/// Composition residual below which a factorization is accepted.
pub const FACTOR_TOL: f64 = 1e-8;
const RESIDUAL_SAMPLES: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Factorization {
    pub subgroup: Vec<usize>,
    pub outer: FiniteBlaschkeProduct,
    pub inner: FiniteBlaschkeProduct,
    pub residual: f64,
}

impl Factorization {
    pub fn passed(&self) -> bool {
        self.residual < FACTOR_TOL
    }
}

/// Least-squares fit of `y = P(x) / Q(x)` with `deg P = deg Q = degree`
/// and `Q(0) = 1`.
pub fn fit_rational(xs: &[Complex64], ys: &[Complex64], degree: usize) -> Result<RationalForm> {
    let rows = xs.len();
    let cols = 2 * degree + 1;
    if rows < cols {
        return Err(Error::InvalidInput(format!(
            "{rows} samples cannot fix {cols} coefficients"
        )));
    }
    let mut a = DMatrix::<Complex64>::zeros(rows, cols);
    let mut b = DVector::<Complex64>::zeros(rows);
    for (s, (&x, &y)) in xs.iter().zip(ys).enumerate() {
        let mut xk = Complex64::new(1.0, 0.0);
        for k in 0..=degree {
            a[(s, k)] = xk;
            if k >= 1 {
                a[(s, degree + k)] = -y * xk;
            }
            xk *= x;
        }
        b[s] = y;
    }
    let scales: Vec<f64> = (0..cols)
        .map(|j| a.column(j).norm().max(f64::MIN_POSITIVE))
        .collect();
    for (j, &s) in scales.iter().enumerate() {
        a.column_mut(j).unscale_mut(s);
    }
    let svd = a.svd(true, true);
    let sv = &svd.singular_values;
    let ratio = sv.min() / sv.max();
    if !(ratio >= FIT_CONDITION) {
        return Err(Error::FitIllConditioned(ratio));
    }
    let sol = svd
        .solve(&b, 0.0)
        .map_err(|e| Error::RootFindingFailure(e.to_string()))?;
    let coef: Vec<Complex64> = (0..cols).map(|j| sol[j] / scales[j]).collect();
    let numerator = coef[..=degree].to_vec();
    let mut denominator = vec![Complex64::new(1.0, 0.0)];
    denominator.extend_from_slice(&coef[degree + 1..]);
    Ok(RationalForm {
        numerator,
        denominator,
    })
}

/// Turns a fitted rational function into a Blaschke product: zeros are the
/// numerator roots, the factor is matched on the samples.
fn to_blaschke(
    form: &RationalForm,
    xs: &[Complex64],
    ys: &[Complex64],
) -> Result<FiniteBlaschkeProduct> {
    let raw = poly_roots(&form.numerator)?;
    let zeros: Vec<Complex64> = polyroots::cluster_roots(&form.numerator, &raw)
        .into_iter()
        .flat_map(|(a, m)| std::iter::repeat(a).take(m))
        .collect();
    for &a in &zeros {
        if a.norm() >= 1.0 - 1e-9 {
            return Err(Error::ZeroOutsideDisk(a));
        }
    }
    let margin = zeros
        .iter()
        .map(|a| 1.0 - a.norm())
        .fold(1.0, f64::min)
        .min(crate::blaschke::DEFAULT_DISK_MARGIN);
    let bare = FiniteBlaschkeProduct::with_margin(zeros, Complex64::new(1.0, 0.0), margin / 2.0)?;
    let mut phase = Complex64::new(0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        phase += y / bare.eval(x)?;
    }
    bare.with_factor(phase / phase.norm())
}

/// Zeros inside the disk and modulus one on the circle.
pub fn verify_blaschke(form: &RationalForm) -> bool {
    let Ok(zeros) = poly_roots(&form.numerator) else {
        return false;
    };
    if zeros.iter().any(|a| a.norm() >= 1.0) {
        return false;
    }
    (0..64).all(|k| {
        let z = Complex64::from_polar(1.0, TAU * k as f64 / 64.0);
        let q = polyroots::eval(&form.denominator, z);
        q.norm() > 0.0 && (form.eval(z).norm() - 1.0).abs() < 1e-8
    })
}

fn circle(radius: f64, count: usize, offset: f64) -> Vec<Complex64> {
    (0..count)
        .map(|k| Complex64::from_polar(radius, TAU * (k as f64 + offset) / count as f64))
        .collect()
}

/// `prod_{k in H} rho_k(z)` at a region point.
pub fn subgroup_product(
    ctx: &OperatorContext,
    subgroup: &[usize],
    z: Complex64,
) -> Result<Complex64> {
    let inv = all_local_inverses(&ctx.branch, &ctx.frame, z)?;
    Ok(subgroup.iter().map(|&k| inv[k].0).product())
}

pub fn factor_from_subgroup(ctx: &OperatorContext, subgroup: &[usize]) -> Result<Factorization> {
    let n = ctx.n();
    let m = subgroup.len();
    if m < 2 || m >= n || n % m != 0 {
        return Err(Error::InvalidInput(format!(
            "{subgroup:?} is not a nontrivial proper subgroup"
        )));
    }
    let radius = ctx.frame.base_radius;

    let zs = circle(radius, 4 * m + 8, 0.25);
    let ws = zs
        .iter()
        .map(|&z| subgroup_product(ctx, subgroup, z))
        .collect::<Result<Vec<_>>>()?;
    let inner_form = fit_rational(&zs, &ws, m)?;
    let inner = to_blaschke(&inner_form, &zs, &ws)?;
    // Move the phase of the inner factor into the outer one.
    let inner = inner.with_factor(Complex64::new(1.0, 0.0))?;

    let d = n / m;
    // equally spaced points would collapse under `inner` when it is close to
    // a power of z, so the outer fit uses golden-angle spacing
    let golden = (3.0 - 5f64.sqrt()) / 2.0;
    let zs: Vec<Complex64> = (0..4 * d + 8)
        .map(|k| Complex64::from_polar(radius, TAU * golden * (k as f64 + 0.5)))
        .collect();
    let xs = zs
        .iter()
        .map(|&z| inner.eval(z))
        .collect::<Result<Vec<_>>>()?;
    let ys = zs
        .iter()
        .map(|&z| ctx.product.eval(z))
        .collect::<Result<Vec<_>>>()?;
    let outer_form = fit_rational(&xs, &ys, d)?;
    let outer = to_blaschke(&outer_form, &xs, &ys)?;

    let check = circle((1.0 + radius) / 2.0, RESIDUAL_SAMPLES, 0.123);
    let mut residual = 0.0f64;
    for z in check {
        let r = (outer.eval(inner.eval(z)?)? - ctx.product.eval(z)?).norm();
        residual = residual.max(r);
    }
    Ok(Factorization {
        subgroup: subgroup.to_vec(),
        outer,
        inner,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::monodromy::analyze;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn context(phi: &FiniteBlaschkeProduct) -> OperatorContext {
        OperatorContext::from_analysis(phi, &analyze(phi).unwrap())
    }

    #[test]
    fn z8_over_pairs() {
        let phi = FiniteBlaschkeProduct::z_power(8);
        let ctx = context(&phi);
        let f = factor_from_subgroup(&ctx, &[0, 4]).unwrap();
        assert_eq!(f.inner.order(), 2);
        assert_eq!(f.outer.order(), 4);
        assert!(f.inner.zeros().iter().all(|a| a.norm() < 1e-8));
        assert!(f.residual < 1e-12, "{}", f.residual);
    }

    #[test]
    fn z8_over_the_index_two_subgroup() {
        let ctx = context(&FiniteBlaschkeProduct::z_power(8));
        let f = factor_from_subgroup(&ctx, &[0, 2, 4, 6]).unwrap();
        assert_eq!((f.outer.order(), f.inner.order()), (2, 4));
        assert!(f.residual < 1e-12, "{}", f.residual);
    }

    #[test]
    fn squared_moebius_of_z2() {
        let phi = FiniteBlaschkeProduct::moebius(c(0.5, 0.0))
            .unwrap()
            .power(2)
            .compose(&FiniteBlaschkeProduct::z_power(2))
            .unwrap();
        let ctx = context(&phi);
        let f = factor_from_subgroup(&ctx, &[0, 2]).unwrap();
        assert!(f.passed(), "{}", f.residual);
        assert!(f.inner.zeros().iter().all(|a| a.norm() < 1e-8));
        let outer_zero_moduli: Vec<f64> = f.outer.zeros().iter().map(|a| a.norm()).collect();
        assert!(outer_zero_moduli.iter().all(|r| (r - 0.5).abs() < 1e-8));
    }

    #[test]
    fn random_outer_of_z2() {
        let outer = FiniteBlaschkeProduct::new(
            vec![c(0.3, -0.2), c(0.5, 0.5), c(-0.6, 0.0), c(0.1, 0.1)],
            c(0.6, 0.8),
        )
        .unwrap();
        let phi = outer.compose(&FiniteBlaschkeProduct::z_power(2)).unwrap();
        let ctx = context(&phi);
        let f = factor_from_subgroup(&ctx, &[0, 4]).unwrap();
        assert!(f.passed(), "{}", f.residual);
    }

    #[test]
    fn product_is_symmetric_in_the_subgroup() {
        let phi = FiniteBlaschkeProduct::moebius(c(0.4, 0.2))
            .unwrap()
            .product(&FiniteBlaschkeProduct::moebius(c(-0.3, 0.1)).unwrap())
            .compose(&FiniteBlaschkeProduct::z_power(3))
            .unwrap();
        let ctx = context(&phi);
        let z = ctx.sample_points(1, 9)[0];
        let a = subgroup_product(&ctx, &[0, 2, 4], z).unwrap();
        let b = subgroup_product(&ctx, &[4, 0, 2], z).unwrap();
        assert!((a - b).norm() < 1e-14);
    }

    #[test]
    fn rejects_trivial_subgroups() {
        let ctx = context(&FiniteBlaschkeProduct::z_power(4));
        assert!(factor_from_subgroup(&ctx, &[0]).is_err());
        assert!(factor_from_subgroup(&ctx, &[0, 1, 2, 3]).is_err());
    }

    #[test]
    fn blaschke_check() {
        let z2 = FiniteBlaschkeProduct::z_power(2).rational_form();
        assert!(verify_blaschke(&z2));
        let outside = RationalForm {
            numerator: vec![c(-2.0, 0.0), c(1.0, 0.0)],
            denominator: vec![c(1.0, 0.0), c(-2.0, 0.0)],
        };
        assert!(!verify_blaschke(&outside));
    }

    #[test]
    fn fit_recovers_known_rational() {
        let phi = FiniteBlaschkeProduct::new(vec![c(0.2, 0.1), c(-0.5, 0.3)], c(0.0, 1.0)).unwrap();
        let xs = circle(0.8, 16, 0.1);
        let ys: Vec<Complex64> = xs.iter().map(|&x| phi.eval(x).unwrap()).collect();
        let form = fit_rational(&xs, &ys, 2).unwrap();
        assert!(verify_blaschke(&form));
        let b = to_blaschke(&form, &xs, &ys).unwrap();
        for z in circle(0.95, 50, 0.3) {
            assert!((b.eval(z).unwrap() - phi.eval(z).unwrap()).norm() < 1e-10);
        }
    }

    #[test]
    fn ill_conditioned_fit_is_reported() {
        // a degree-1 function fitted with degree 2 leaves a null direction
        let xs = circle(0.8, 16, 0.1);
        let ys: Vec<Complex64> = xs.iter().map(|&x| x).collect();
        assert!(matches!(
            fit_rational(&xs, &ys, 2),
            Err(Error::FitIllConditioned(_))
        ));
    }
}
