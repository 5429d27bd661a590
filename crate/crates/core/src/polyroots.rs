//! Complex polynomial root finding and fiber solving.
//!
//! Coefficient slices are in ascending order: `c[k]` multiplies `x^k`.
//! Roots are found with the Aberth–Ehrlich simultaneous iteration and then
//! grouped into clusters whose multiplicity is certified against the Taylor
//! expansion of the polynomial at the cluster centroid.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::blaschke::FiniteBlaschkeProduct;
use crate::error::{Error, Result};

/// Trailing coefficients below this fraction of the largest one are dropped.
pub const TRIM_TOL: f64 = 1e-14;
/// Default cap on Aberth sweeps per attempt.
pub const MAX_SWEEPS: usize = 1000;
const RESTARTS: usize = 4;
/// Relative size of the low Taylor coefficients below which a cluster is
/// accepted as a genuine multiple root.
const MULTIPLICITY_TOL: f64 = 1e-9;

pub fn eval(coeffs: &[Complex64], x: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
}

/// Value together with the running bound `sum |c_k| |x|^k` used for
/// backward-error stopping tests.
fn eval_with_bound(coeffs: &[Complex64], x: Complex64) -> (Complex64, f64) {
    let ax = x.norm();
    let mut v = Complex64::new(0.0, 0.0);
    let mut b = 0.0;
    for &c in coeffs.iter().rev() {
        v = v * x + c;
        b = b * ax + c.norm();
    }
    (v, b)
}

pub fn derivative(coeffs: &[Complex64]) -> Vec<Complex64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| c * k as f64)
        .collect()
}

pub fn mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn sub(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let len = a.len().max(b.len());
    (0..len)
        .map(|k| a.get(k).copied().unwrap_or_default() - b.get(k).copied().unwrap_or_default())
        .collect()
}

/// Monic-times-`leading` polynomial with the given roots.
pub fn from_roots(roots: &[Complex64], leading: Complex64) -> Vec<Complex64> {
    let mut p = vec![leading];
    for &r in roots {
        p = mul(&p, &[-r, Complex64::new(1.0, 0.0)]);
    }
    p
}

/// Drops negligible high-degree coefficients.
pub fn trim(coeffs: &[Complex64]) -> Vec<Complex64> {
    let max = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut end = coeffs.len();
    while end > 0 && coeffs[end - 1].norm() <= TRIM_TOL * max {
        end -= 1;
    }
    coeffs[..end].to_vec()
}

/// Coefficients of `t -> p(c + t)`.
pub fn taylor_shift(coeffs: &[Complex64], c: Complex64) -> Vec<Complex64> {
    let mut b = coeffs.to_vec();
    let n = b.len();
    for i in 0..n {
        for j in (i..n.saturating_sub(1)).rev() {
            let next = b[j + 1];
            b[j] += c * next;
        }
    }
    b
}

/// All roots of the polynomial, repeated according to multiplicity, with
/// the residual certified as `|p(r)| < 1e-10 * sum |c_k| |r|^k`.
pub fn poly_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    poly_roots_with(coeffs, MAX_SWEEPS)
}

pub fn poly_roots_with(coeffs: &[Complex64], max_sweeps: usize) -> Result<Vec<Complex64>> {
    if coeffs
        .iter()
        .any(|c| !c.re.is_finite() || !c.im.is_finite())
    {
        return Err(Error::InvalidInput("non-finite coefficient".into()));
    }
    let p = trim(coeffs);
    if p.is_empty() {
        return Err(Error::InvalidInput("zero polynomial".into()));
    }
    // Exact zero low coefficients are exact roots at the origin.
    let zeros_at_origin = p.iter().take_while(|c| c.norm() == 0.0).count();
    let p = &p[zeros_at_origin..];
    let mut roots = vec![Complex64::new(0.0, 0.0); zeros_at_origin];
    match p.len() {
        1 => return Ok(roots),
        2 => {
            roots.push(-p[0] / p[1]);
            return Ok(roots);
        }
        _ => {}
    }

    let mut last_err = String::new();
    for attempt in 0..RESTARTS {
        let (found, converged) = aberth(p, max_sweeps, attempt as u64);
        let certified = found.iter().all(|&r| {
            let (v, b) = eval_with_bound(p, r);
            v.norm() <= 1e-10 * b
        });
        if certified {
            roots.extend(polish(p, found));
            return Ok(roots);
        }
        last_err = format!(
            "Aberth iteration (converged: {converged}) did not certify after {max_sweeps} sweeps, attempt {attempt}"
        );
    }
    Err(Error::RootFindingFailure(last_err))
}

fn aberth(p: &[Complex64], max_sweeps: usize, attempt: u64) -> (Vec<Complex64>, bool) {
    let n = p.len() - 1;
    let dp = derivative(p);
    let eps = f64::EPSILON;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + attempt);

    let mut radius = (p[0].norm() / p[n].norm()).powf(1.0 / n as f64);
    if !radius.is_finite() || radius == 0.0 {
        radius = 1.0;
    }
    let offset = 0.4
        + if attempt > 0 {
            rng.gen_range(0.0..std::f64::consts::TAU)
        } else {
            0.0
        };
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| {
            let wobble = 1.0 + 0.05 * rng.gen_range(-1.0..1.0);
            let theta = std::f64::consts::TAU * k as f64 / n as f64 + offset;
            Complex64::from_polar(radius * wobble, theta)
        })
        .collect();
    let mut done = vec![false; n];

    for _ in 0..max_sweeps {
        let mut all_done = true;
        for i in 0..n {
            if done[i] {
                continue;
            }
            let (v, bound) = eval_with_bound(p, z[i]);
            if v.norm() <= 8.0 * n as f64 * eps * bound {
                done[i] = true;
                continue;
            }
            all_done = false;
            let dv = eval(&dp, z[i]);
            let ratio = if dv.norm() == 0.0 {
                Complex64::new(1e-8 * (1.0 + z[i].norm()), 0.0)
            } else {
                v / dv
            };
            let s: Complex64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let d = z[i] - z[j];
                    if d.norm() == 0.0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        d.inv()
                    }
                })
                .sum();
            let corr = ratio / (Complex64::new(1.0, 0.0) - ratio * s);
            if corr.re.is_finite() && corr.im.is_finite() {
                z[i] -= corr;
                if corr.norm() <= eps * z[i].norm() {
                    done[i] = true;
                }
            } else {
                z[i] += Complex64::new(1e-6, 1e-6);
            }
        }
        if all_done {
            return (z, true);
        }
    }
    (z, false)
}

/// One guarded Newton step per root; a step is kept only when it lowers the
/// residual and stays well inside the gap to the nearest other root.
fn polish(p: &[Complex64], mut roots: Vec<Complex64>) -> Vec<Complex64> {
    let dp = derivative(p);
    for _ in 0..2 {
        for i in 0..roots.len() {
            let r = roots[i];
            let gap = roots
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &s)| (s - r).norm())
                .fold(f64::INFINITY, f64::min);
            let v = eval(p, r);
            let d = eval(&dp, r);
            if d.norm() == 0.0 {
                continue;
            }
            let step = v / d;
            if step.norm() < 0.1 * gap {
                let cand = r - step;
                if eval(p, cand).norm() < v.norm() {
                    roots[i] = cand;
                }
            }
        }
    }
    roots
}

/// Groups approximate roots into (centroid, multiplicity) pairs.
///
/// Candidate clusters are formed by single linkage at a coarse radius and
/// accepted only when the low Taylor coefficients at the centroid vanish to
/// working precision; rejected candidates are split at a finer radius.
pub fn cluster_roots(coeffs: &[Complex64], roots: &[Complex64]) -> Vec<(Complex64, usize)> {
    let p = trim(coeffs);
    let mut out = Vec::new();
    split_clusters(&p, roots.to_vec(), 1e-2, &mut out);
    out.sort_by(|a, b| {
        a.0.re
            .partial_cmp(&b.0.re)
            .unwrap()
            .then(a.0.im.partial_cmp(&b.0.im).unwrap())
    });
    out
}

fn split_clusters(
    p: &[Complex64],
    roots: Vec<Complex64>,
    radius: f64,
    out: &mut Vec<(Complex64, usize)>,
) {
    for group in linkage_groups(&roots, radius) {
        if group.len() == 1 {
            out.push((group[0], 1));
            continue;
        }
        if group.iter().all(|&r| r == group[0]) {
            out.push((group[0], group.len()));
            continue;
        }
        let m = group.len();
        let centroid = group.iter().sum::<Complex64>() / m as f64;
        if let Some(c) = certify_multiple_root(p, centroid, m) {
            out.push((c, m));
        } else if radius > 1e-8 {
            split_clusters(p, group, radius / 10.0, out);
        } else {
            out.extend(group.into_iter().map(|r| (r, 1)));
        }
    }
}

fn linkage_groups(roots: &[Complex64], radius: f64) -> Vec<Vec<Complex64>> {
    let n = roots.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while parent[r] != r {
            r = parent[r];
        }
        let mut c = i;
        while parent[c] != r {
            let next = parent[c];
            parent[c] = r;
            c = next;
        }
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            let scale = 1.0f64.max(roots[i].norm());
            if (roots[i] - roots[j]).norm() < radius * scale {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: Vec<Vec<Complex64>> = Vec::new();
    let mut index = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if index[r] == usize::MAX {
            index[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[index[r]].push(roots[i]);
    }
    groups
}

fn certify_multiple_root(p: &[Complex64], centroid: Complex64, m: usize) -> Option<Complex64> {
    if p.len() <= m {
        return None;
    }
    let scale: f64 = p
        .iter()
        .enumerate()
        .map(|(k, c)| c.norm() * (1.0 + centroid.norm()).powi(k as i32))
        .sum();
    // The cluster mean can be off by the cluster spread, so first move to
    // the simple root of the (m-1)-th derivative.
    let spread = 1e-2 * (1.0 + centroid.norm());
    let mut c = centroid;
    for _ in 0..20 {
        let b = taylor_shift(p, c);
        if b[m].norm() == 0.0 {
            return None;
        }
        let step = b[m - 1] / (b[m] * m as f64);
        if !step.re.is_finite() || !step.im.is_finite() || (c - step - centroid).norm() > spread {
            return None;
        }
        c -= step;
        if step.norm() <= 1e-16 * (1.0 + c.norm()) {
            break;
        }
    }
    let b = taylor_shift(p, c);
    if b[..m].iter().any(|x| x.norm() > MULTIPLICITY_TOL * scale) {
        return None;
    }
    Some(c)
}

/// A full preimage `phi^{-1}(target)`, points repeated by multiplicity.
#[derive(Debug, Clone, PartialEq)]
pub struct Fiber {
    pub target: Complex64,
    pub points: Vec<Complex64>,
}

/// Solves `P(w) - c Q(w) = 0` for the rational form `P/Q` of the product.
pub fn fiber(phi: &FiniteBlaschkeProduct, c: Complex64) -> Result<Fiber> {
    if c.norm() >= 1.0 {
        return Err(Error::InvalidInput(format!(
            "fiber target {c} must lie in the open disk"
        )));
    }
    let form = phi.rational_form();
    let scaled: Vec<Complex64> = form.denominator.iter().map(|&q| q * c).collect();
    let poly = sub(&form.numerator, &scaled);
    let raw = poly_roots(&poly)?;
    let mut points = Vec::with_capacity(raw.len());
    for (centre, mult) in cluster_roots(&poly, &raw) {
        let refined = if mult == 1 {
            newton_refine(phi, c, centre, 1e-6).unwrap_or(centre)
        } else {
            centre
        };
        points.extend(std::iter::repeat(refined).take(mult));
    }
    Ok(Fiber { target: c, points })
}

/// Newton iteration for `phi(w) = c` that refuses to leave the ball of
/// radius `max_step` around `w0`.
pub fn newton_refine(
    phi: &FiniteBlaschkeProduct,
    c: Complex64,
    w0: Complex64,
    max_step: f64,
) -> Result<Complex64> {
    let mut w = w0;
    let mut best = (f64::INFINITY, w0);
    for _ in 0..50 {
        let v = phi.eval(w)? - c;
        let r = v.norm();
        if r < best.0 {
            best = (r, w);
        }
        if r < 1e-15 {
            break;
        }
        let d = phi.derivative(w)?;
        if d.norm() < 1e-12 {
            return Err(Error::NewtonDivergence { start: w0 });
        }
        let step = v / d;
        w -= step;
        if (w - w0).norm() > max_step || !w.re.is_finite() {
            return Err(Error::NewtonDivergence { start: w0 });
        }
        if step.norm() <= 1e-16 * (1.0 + w.norm()) {
            let r = (phi.eval(w)? - c).norm();
            if r < best.0 {
                best = (r, w);
            }
            break;
        }
    }
    if best.0 < 1e-13 {
        Ok(best.1)
    } else {
        Err(Error::NewtonDivergence { start: w0 })
    }
}
