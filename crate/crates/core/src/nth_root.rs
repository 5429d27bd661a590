//! A single-valued `n`-th root `u` of a Blaschke product, cut along the
//! segments joining the smallest zero to the others, and the labeled local
//! inverses `rho_k = u^{-1}(zeta^k u)` on the outer annulus where `u` is
//! conformal.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::Serialize;

use crate::blaschke::FiniteBlaschkeProduct;
use crate::error::{Error, Result};
use crate::polyroots::fiber;

/// Minimum distance to the cut system for `u` evaluations.
pub const CUT_TOL: f64 = 1e-6;
/// Residual accepted when a fiber point is matched to a sector `zeta^k`.
pub const LABEL_TOL: f64 = 1e-6;
/// Frame attempts before giving up.
pub const FRAME_ATTEMPTS: usize = 6;

const CIRCLE_SAMPLES: usize = 4096;
const SEGMENT_SAMPLES: usize = 256;
const BOUND_SLACK: f64 = 1e-3;
const MAX_REFINEMENTS: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NthRootBranch {
    pub product: FiniteBlaschkeProduct,
    pub anchor: usize,
    pub cut_segments: Vec<(Complex64, Complex64)>,
    pub root_constant: Complex64,
    pub n: usize,
}

/// The working circle `|z| = R`, a base point on it, and the level
/// `s = r^n` such that `{|phi| > s}` is an annulus on which `u` is conformal
/// onto `{r < |w| < 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnnulusFrame {
    pub base_radius: f64,
    pub base_point: Complex64,
    pub image_radius: f64,
    pub level: f64,
}

pub fn root_of_unity(k: i64, n: usize) -> Complex64 {
    let k = k.rem_euclid(n as i64);
    Complex64::from_polar(1.0, TAU * k as f64 / n as f64)
}

fn principal_root(z: Complex64, n: usize) -> Complex64 {
    if n == 1 {
        z
    } else {
        z.powf(1.0 / n as f64)
    }
}

/// Distance from `z` to the closed segment `[a, b]`.
pub fn segment_distance(z: Complex64, a: Complex64, b: Complex64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (z - a).norm();
    }
    let t = ((z - a) * d.conj()).re / len2;
    (z - (a + d * t.clamp(0.0, 1.0))).norm()
}

/// Upper bound for `|phi'|` on `|z| <= rho`.
/// Bound on `|phi'|` over the points of the disk within `delta` of `z`,
/// from `|1 - conj(a) w| >= |1 - conj(a) z| - |a| delta`.
fn local_derivative_bound(phi: &FiniteBlaschkeProduct, z: Complex64, delta: f64) -> f64 {
    phi.zeros()
        .iter()
        .map(|a| {
            let gap = (1.0 - a.conj() * z).norm() - a.norm() * delta;
            if gap <= 0.0 {
                f64::INFINITY
            } else {
                (1.0 - a.norm_sqr()) / (gap * gap)
            }
        })
        .sum()
}

/// Certified upper bound for `|phi|` on the segment `[a, b]`; the sampling
/// is refined until the bound is close to the sampled maximum.
fn segment_upper_bound(phi: &FiniteBlaschkeProduct, a: Complex64, b: Complex64) -> Result<f64> {
    let len = (b - a).norm();
    let mut samples = SEGMENT_SAMPLES;
    loop {
        let half = len / samples as f64 / 2.0;
        let mut top = 0.0f64;
        let mut bound = 0.0f64;
        for s in 0..samples {
            let z = a + (b - a) * ((s as f64 + 0.5) / samples as f64);
            let v = phi.eval(z)?.norm();
            top = top.max(v);
            bound = bound.max(v + local_derivative_bound(phi, z, half) * half);
        }
        if bound - top < BOUND_SLACK || samples >= SEGMENT_SAMPLES << MAX_REFINEMENTS {
            return Ok(bound.min(1.0));
        }
        samples *= 2;
    }
}

/// Certified lower bound for `|phi|` on `|z| = radius`, refined until it
/// clears `target` or is close to the sampled minimum.
fn circle_lower_bound(phi: &FiniteBlaschkeProduct, radius: f64, target: f64) -> Result<f64> {
    let mut samples = CIRCLE_SAMPLES;
    loop {
        let half_arc = TAU * radius / samples as f64 / 2.0;
        let mut raw = f64::INFINITY;
        let mut low = f64::INFINITY;
        for j in 0..samples {
            let z = Complex64::from_polar(radius, TAU * j as f64 / samples as f64);
            let v = phi.eval(z)?.norm();
            raw = raw.min(v);
            low = low.min(v - local_derivative_bound(phi, z, half_arc) * half_arc);
        }
        if low > target || raw - low < BOUND_SLACK || samples >= CIRCLE_SAMPLES << MAX_REFINEMENTS {
            return Ok(low);
        }
        samples *= 2;
    }
}

pub fn build_branch(phi: &FiniteBlaschkeProduct) -> NthRootBranch {
    let n = phi.order();
    let zeros = phi.zeros();
    let anchor = (0..n)
        .min_by(|&i, &j| zeros[i].norm().partial_cmp(&zeros[j].norm()).unwrap())
        .unwrap();
    let a1 = zeros[anchor];
    let cut_segments = zeros
        .iter()
        .enumerate()
        .filter(|&(i, &a)| i != anchor && a != a1)
        .map(|(_, &a)| (a1, a))
        .collect();
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    let root_constant = principal_root(phi.factor() * sign, n);
    NthRootBranch {
        product: phi.clone(),
        anchor,
        cut_segments,
        root_constant,
        n,
    }
}

impl NthRootBranch {
    /// Replaces `kappa` by another root of the same power.
    pub fn with_constant(&self, kappa: Complex64) -> Result<Self> {
        let sign = if self.n % 2 == 0 { 1.0 } else { -1.0 };
        if (kappa.powu(self.n as u32) - self.product.factor() * sign).norm() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "{kappa} is not an admissible root constant"
            )));
        }
        Ok(Self {
            root_constant: kappa,
            ..self.clone()
        })
    }

    pub fn cut_distance(&self, z: Complex64) -> f64 {
        self.cut_segments
            .iter()
            .map(|&(a, b)| segment_distance(z, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn zeta(&self, k: i64) -> Complex64 {
        root_of_unity(k, self.n)
    }

    pub fn u_eval(&self, z: Complex64) -> Result<Complex64> {
        if self.cut_distance(z) <= CUT_TOL {
            return Err(Error::CutProximity(z));
        }
        let one = Complex64::new(1.0, 0.0);
        let zeros = self.product.zeros();
        let a1 = zeros[self.anchor];
        let mut value = self.root_constant * (z - a1);
        for (i, &a) in zeros.iter().enumerate() {
            if i != self.anchor && a != a1 {
                value *= principal_root((z - a) / (z - a1), self.n);
            }
            let d = one - a.conj() * z;
            if d.norm() < crate::blaschke::POLE_TOL {
                return Err(Error::PoleProximity(z));
            }
            value /= principal_root(d, self.n);
        }
        Ok(value)
    }

    /// `u' = u * (phi'/phi) / n`.
    pub fn u_derivative(&self, z: Complex64) -> Result<Complex64> {
        let u = self.u_eval(z)?;
        let log_d = self.product.log_derivative(z)?;
        Ok(u * log_d / self.n as f64)
    }

    /// Newton solve of `u(z) = w` starting at `hint`.
    pub fn u_inverse(&self, w: Complex64, hint: Complex64) -> Result<Complex64> {
        let mut z = hint;
        let mut residual = f64::INFINITY;
        for _ in 0..60 {
            let u = self
                .u_eval(z)
                .map_err(|_| Error::NewtonDivergence { start: hint })?;
            let r = u - w;
            residual = r.norm();
            if residual < 1e-14 * w.norm().max(1.0) {
                break;
            }
            let du = self
                .u_derivative(z)
                .map_err(|_| Error::NewtonDivergence { start: hint })?;
            let step = r / du;
            if !step.re.is_finite() || !step.im.is_finite() || (z - step - hint).norm() > 0.5 {
                return Err(Error::NewtonDivergence { start: hint });
            }
            z -= step;
            if step.norm() < 1e-16 * z.norm().max(1.0) {
                residual = (self.u_eval(z)? - w).norm();
                break;
            }
        }
        if residual < 1e-12 {
            Ok(z)
        } else {
            Err(Error::NewtonDivergence { start: hint })
        }
    }

    /// Labels the fiber `phi^{-1}(phi(z))` by sectors: entry `k` is the
    /// point `w` with `u(w) = zeta^k u(z)`. Entry 0 is `z` itself.
    pub fn labeled_fiber_at(&self, z: Complex64) -> Result<Vec<Complex64>> {
        let n = self.n;
        let uz = self.u_eval(z)?;
        let target = self.product.eval(z)?;
        let points = fiber(&self.product, target)?.points;
        let mut labeled: Vec<Option<Complex64>> = vec![None; n];
        for w in points {
            let ratio = self.u_eval(w)? / uz;
            let k = ((ratio.arg() / TAU * n as f64).round() as i64).rem_euclid(n as i64) as usize;
            if (ratio - self.zeta(k as i64)).norm() > LABEL_TOL {
                return Err(Error::LabelingAmbiguity(format!(
                    "fiber point {w} does not match any sector (ratio {ratio})"
                )));
            }
            if labeled[k].is_some() {
                return Err(Error::LabelingAmbiguity(format!(
                    "two fiber points claim sector {k}"
                )));
            }
            labeled[k] = Some(w);
        }
        let mut out: Vec<Complex64> = labeled
            .into_iter()
            .enumerate()
            .map(|(k, w)| w.ok_or_else(|| Error::LabelingAmbiguity(format!("sector {k} is empty"))))
            .collect::<Result<_>>()?;
        if (out[0] - z).norm() > LABEL_TOL {
            return Err(Error::LabelingAmbiguity(format!(
                "sector 0 does not contain {z}"
            )));
        }
        out[0] = z;
        for i in 0..n {
            for j in i + 1..n {
                if (out[i] - out[j]).norm() <= LABEL_TOL {
                    return Err(Error::LabelingAmbiguity(format!(
                        "fiber points {i} and {j} coincide"
                    )));
                }
            }
        }
        Ok(out)
    }
}

impl AnnulusFrame {
    pub fn contains(&self, branch: &NthRootBranch, z: Complex64) -> bool {
        z.norm() < 1.0
            && branch
                .product
                .eval(z)
                .map(|w| w.norm() > self.level)
                .unwrap_or(false)
    }

    fn require(&self, branch: &NthRootBranch, z: Complex64) -> Result<()> {
        if self.contains(branch, z) {
            Ok(())
        } else {
            Err(Error::OutsideRegion(z))
        }
    }
}

/// `(rho_k(z), rho_k'(z))` for every `k`, labeled through the fiber.
pub fn all_local_inverses(
    branch: &NthRootBranch,
    frame: &AnnulusFrame,
    z: Complex64,
) -> Result<Vec<(Complex64, Complex64)>> {
    frame.require(branch, z)?;
    let points = branch.labeled_fiber_at(z)?;
    let du = branch.u_derivative(z)?;
    points
        .into_iter()
        .enumerate()
        .map(|(k, w)| {
            if k == 0 {
                return Ok((z, Complex64::new(1.0, 0.0)));
            }
            let dw = branch.u_derivative(w)?;
            Ok((w, branch.zeta(k as i64) * du / dw))
        })
        .collect()
}

pub fn local_inverse(
    branch: &NthRootBranch,
    frame: &AnnulusFrame,
    k: i64,
    z: Complex64,
) -> Result<(Complex64, Complex64)> {
    let k = k.rem_euclid(branch.n as i64) as usize;
    if k == 0 {
        frame.require(branch, z)?;
        return Ok((z, Complex64::new(1.0, 0.0)));
    }
    Ok(all_local_inverses(branch, frame, z)?[k])
}

/// `rho_k(z)` by Newton from a nearby, already matched point.
pub fn local_inverse_from_hint(
    branch: &NthRootBranch,
    frame: &AnnulusFrame,
    k: i64,
    z: Complex64,
    hint: Complex64,
) -> Result<(Complex64, Complex64)> {
    frame.require(branch, z)?;
    let uz = branch.u_eval(z)?;
    let w = branch.u_inverse(branch.zeta(k) * uz, hint)?;
    let d = branch.zeta(k) * branch.u_derivative(z)? / branch.u_derivative(w)?;
    Ok((w, d))
}

/// Chooses a base point on `|z| = radius` whose straight tails to the
/// punctures stay as far as possible from the other punctures.
pub fn choose_base_point(branch: &NthRootBranch, radius: f64, locus: &[Complex64]) -> Complex64 {
    const CANDIDATES: usize = 720;
    let offset = 0.0137;
    let mut best = (
        f64::NEG_INFINITY,
        f64::NEG_INFINITY,
        Complex64::new(radius, 0.0),
    );
    for j in 0..CANDIDATES {
        let z0 = Complex64::from_polar(radius, TAU * (j as f64 + offset) / CANDIDATES as f64);
        let mut clearance = f64::INFINITY;
        for (i, &e) in locus.iter().enumerate() {
            for (l, &f) in locus.iter().enumerate() {
                if i != l {
                    clearance = clearance.min(segment_distance(f, z0, e));
                }
            }
        }
        let cut = branch.cut_distance(z0);
        let better =
            clearance > best.0 + 1e-12 || ((clearance - best.0).abs() <= 1e-12 && cut > best.1);
        if better {
            best = (clearance, cut, z0);
        }
    }
    best.2
}

/// Finds a working circle on which the outer annulus is certified.
///
/// `locus` holds the branch locus and critical points. The level is placed
/// strictly between a rigorous upper bound for `|phi|` on the cut system and
/// at the critical points, and a rigorous lower bound for `|phi|` on the
/// working circle; the base fiber must then label cleanly.
pub fn choose_frame(branch: &NthRootBranch, locus: &[Complex64]) -> Result<AnnulusFrame> {
    let phi = &branch.product;
    let n = branch.n;
    let zero_radius = phi.zeros().iter().map(|a| a.norm()).fold(0.0, f64::max);
    let m = locus.iter().map(|e| e.norm()).fold(zero_radius, f64::max);

    let mut inner = 0.0f64;
    for &e in locus {
        inner = inner.max(phi.eval(e)?.norm());
    }
    for &(a, b) in &branch.cut_segments {
        inner = inner.max(segment_upper_bound(phi, a, b)?);
    }
    for &a in phi.zeros() {
        inner = inner.max(phi.eval(a)?.norm());
    }

    let mut radius = (1.0 + m) / 2.0;
    for _ in 0..FRAME_ATTEMPTS {
        if let Some(frame) = try_frame(branch, locus, radius, inner, n) {
            return Ok(frame);
        }
        radius = (radius + 1.0) / 2.0;
    }
    Err(Error::FrameNotFound {
        attempts: FRAME_ATTEMPTS,
    })
}

fn try_frame(
    branch: &NthRootBranch,
    locus: &[Complex64],
    radius: f64,
    inner: f64,
    n: usize,
) -> Option<AnnulusFrame> {
    let phi = &branch.product;
    let low = circle_lower_bound(phi, radius, inner).ok()?;
    if !(low > inner) {
        return None;
    }
    let level = (inner + low) / 2.0;
    let base_point = choose_base_point(branch, radius, locus);
    if branch.cut_distance(base_point) <= 1e-3 {
        return None;
    }
    branch.labeled_fiber_at(base_point).ok()?;
    Some(AnnulusFrame {
        base_radius: radius,
        base_point,
        image_radius: level.powf(1.0 / n as f64),
        level,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn locus_of(phi: &FiniteBlaschkeProduct) -> Vec<Complex64> {
        let mut pts = Vec::new();
        for cp in phi.critical_points().unwrap() {
            pts.extend(fiber(phi, phi.eval(cp.point).unwrap()).unwrap().points);
        }
        pts
    }

    fn random_product(rng: &mut ChaCha8Rng, n: usize) -> FiniteBlaschkeProduct {
        let zeros = (0..n)
            .map(|_| Complex64::from_polar(rng.gen_range(0.0..0.7), rng.gen_range(0.0..TAU)))
            .collect();
        FiniteBlaschkeProduct::new(zeros, Complex64::from_polar(1.0, rng.gen_range(0.0..TAU)))
            .unwrap()
    }

    #[test]
    fn z_power_root_is_linear() {
        let phi = FiniteBlaschkeProduct::z_power(5);
        let b = build_branch(&phi);
        assert!(b.cut_segments.is_empty());
        let z = c(0.3, -0.2);
        assert!((b.u_eval(z).unwrap() - b.root_constant * z).norm() < 1e-15);
        assert!((b.u_derivative(z).unwrap() - b.root_constant).norm() < 1e-14);
        let w = c(0.1, 0.4);
        assert!(
            (b.u_inverse(w, w / b.root_constant).unwrap() - w / b.root_constant).norm() < 1e-15
        );
    }

    #[test]
    fn power_identity_order_two() {
        let phi = FiniteBlaschkeProduct::new(vec![c(0.3, 0.0), c(-0.4, 0.0)], c(1.0, 0.0)).unwrap();
        let b = build_branch(&phi);
        let mut count = 0;
        for i in 0..20 {
            for j in 0..20 {
                let z = c(-0.95 + 0.1 * i as f64, -0.95 + 0.1 * j as f64);
                if z.norm() >= 1.0 || b.cut_distance(z) <= 1e-3 {
                    continue;
                }
                count += 1;
                let u = b.u_eval(z).unwrap();
                assert!((u * u - phi.eval(z).unwrap()).norm() < 1e-10);
            }
        }
        assert!(count > 200);
    }

    #[test]
    fn power_identity_and_boundary_modulus_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 2..=7 {
            let phi = random_product(&mut rng, n);
            let b = build_branch(&phi);
            for k in 0..64 {
                let t = Complex64::from_polar(1.0, TAU * k as f64 / 64.0);
                assert!((b.u_eval(t).unwrap().norm() - 1.0).abs() < 1e-10);
            }
            for _ in 0..200 {
                let z = Complex64::from_polar(rng.gen::<f64>().sqrt(), rng.gen_range(0.0..TAU));
                if b.cut_distance(z) <= 1e-3 {
                    continue;
                }
                let u = b.u_eval(z).unwrap();
                assert!((u.powu(n as u32) - phi.eval(z).unwrap()).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn derivative_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let phi = random_product(&mut rng, 5);
        let b = build_branch(&phi);
        let h = 1e-6;
        for k in 0..40 {
            let z = Complex64::from_polar(0.9, TAU * k as f64 / 40.0);
            let fd = (b.u_eval(z + h).unwrap() - b.u_eval(z - h).unwrap()) / (2.0 * h);
            let d = b.u_derivative(z).unwrap();
            assert!((fd - d).norm() <= 1e-6 * d.norm());
            let u = b.u_eval(z).unwrap();
            let lhs = d / u;
            let rhs = phi.derivative(z).unwrap() / (phi.eval(z).unwrap() * 5.0);
            assert!((lhs - rhs).norm() < 1e-9);
        }
    }

    #[test]
    fn frame_for_z_power() {
        let phi = FiniteBlaschkeProduct::z_power(4);
        let b = build_branch(&phi);
        let frame = choose_frame(&b, &[c(0.0, 0.0)]).unwrap();
        assert_eq!(frame.base_radius, 0.5);
        assert!((frame.base_point.norm() - 0.5).abs() < 1e-15);
        let pts = b.labeled_fiber_at(frame.base_point).unwrap();
        for (k, w) in pts.iter().enumerate() {
            assert!((w - b.zeta(k as i64) * frame.base_point).norm() < 1e-12);
        }
    }

    #[test]
    fn frame_with_zero_near_boundary() {
        let phi = FiniteBlaschkeProduct::new(vec![c(0.9, 0.0), c(0.0, 0.0)], c(1.0, 0.0)).unwrap();
        let b = build_branch(&phi);
        let frame = choose_frame(&b, &locus_of(&phi)).unwrap();
        assert!(frame.base_radius >= 0.95);
        for k in 0..256 {
            let z = Complex64::from_polar(frame.base_radius, TAU * k as f64 / 256.0);
            assert!(frame.contains(&b, z));
        }
    }

    #[test]
    fn round_trip_and_fiber_membership() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let phi = random_product(&mut rng, 6);
        let b = build_branch(&phi);
        let frame = choose_frame(&b, &locus_of(&phi)).unwrap();
        for j in 0..100 {
            let z = Complex64::from_polar(frame.base_radius, TAU * j as f64 / 100.0);
            let back = b.u_inverse(b.u_eval(z).unwrap(), z * c(1.0, 1e-3)).unwrap();
            assert!((back - z).norm() < 1e-10);
        }
        let z0 = frame.base_point;
        let f = fiber(&phi, phi.eval(z0).unwrap()).unwrap();
        for k in 1..6 {
            let (w, _) = local_inverse(&b, &frame, k, z0).unwrap();
            let nearest = f
                .points
                .iter()
                .map(|p| (p - w).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(nearest < 1e-10);
            assert!((phi.eval(w).unwrap() - phi.eval(z0).unwrap()).norm() < 1e-10);
        }
    }

    #[test]
    fn local_inverse_examples() {
        let phi = FiniteBlaschkeProduct::z_power(6);
        let b = build_branch(&phi);
        let frame = choose_frame(&b, &[c(0.0, 0.0)]).unwrap();
        let z = c(0.2, 0.6);
        assert_eq!(local_inverse(&b, &frame, 0, z).unwrap(), (z, c(1.0, 0.0)));
        for k in 1..6 {
            let (w, d) = local_inverse(&b, &frame, k, z).unwrap();
            assert!((w - b.zeta(k) * z).norm() < 1e-12);
            assert!((d - b.zeta(k)).norm() < 1e-12);
        }
    }

    #[test]
    fn local_inverse_derivative_and_hint() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let phi = random_product(&mut rng, 4);
        let b = build_branch(&phi);
        let frame = choose_frame(&b, &locus_of(&phi)).unwrap();
        let z = frame.base_point * 1.02;
        let h = 1e-6;
        let all = all_local_inverses(&b, &frame, z).unwrap();
        let plus = all_local_inverses(&b, &frame, z + h).unwrap();
        let minus = all_local_inverses(&b, &frame, z - h).unwrap();
        for k in 0..4 {
            let fd = (plus[k].0 - minus[k].0) / (2.0 * h);
            assert!((fd - all[k].1).norm() <= 1e-5 * all[k].1.norm());
            let hinted = local_inverse_from_hint(&b, &frame, k as i64, z, all[k].0 + 1e-4).unwrap();
            assert!((hinted.0 - all[k].0).norm() < 1e-12);
        }
    }

    #[test]
    fn outside_region_is_rejected() {
        let phi = FiniteBlaschkeProduct::new(vec![c(0.3, 0.0), c(-0.3, 0.0)], c(1.0, 0.0)).unwrap();
        let b = build_branch(&phi);
        let frame = choose_frame(&b, &locus_of(&phi)).unwrap();
        assert!(matches!(
            local_inverse(&b, &frame, 1, c(0.0, 0.01)),
            Err(Error::OutsideRegion(_))
        ));
    }

    #[test]
    fn cut_proximity_is_reported() {
        let phi = FiniteBlaschkeProduct::new(vec![c(0.1, 0.0), c(0.5, 0.0)], c(1.0, 0.0)).unwrap();
        let b = build_branch(&phi);
        assert!(matches!(b.u_eval(c(0.3, 0.0)), Err(Error::CutProximity(_))));
    }
}
