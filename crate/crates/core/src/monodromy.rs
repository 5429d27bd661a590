//! Monodromy of the local inverses: the branch locus, lasso loops around its
//! points, numerical continuation of the labeled base fiber, and the orbit
//! partition of `Z_n` generated by the resulting permutations.

use std::f64::consts::TAU;
use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::blaschke::{CriticalPoint, FiniteBlaschkeProduct};
use crate::error::{Error, Result};
use crate::nth_root::{build_branch, choose_frame, segment_distance, AnnulusFrame, NthRootBranch};
use crate::polyroots::{fiber, newton_refine};
use crate::zn::ZnPartition;

/// Branch-locus points closer than this are merged.
pub const LOCUS_DEDUP_TOL: f64 = 1e-8;
/// Branch-locus points closer than this make an analysis low-confidence.
pub const LOW_CONFIDENCE_SEPARATION: f64 = 1e-4;
/// End-fiber matching tolerance.
pub const MATCH_TOL: f64 = 1e-6;
/// Tracked points may not come closer than this.
pub const COLLISION_TOL: f64 = 10.0 * MATCH_TOL;
/// Vertices on each loop circle.
pub const LOOP_VERTICES: usize = 64;

const MAX_STEP: f64 = 0.05;
const MAX_HALVINGS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchLocus {
    pub critical_points: Vec<CriticalPoint>,
    pub critical_values: Vec<Complex64>,
    pub points: Vec<Complex64>,
}

impl BranchLocus {
    /// Smallest distance between two locus points.
    pub fn min_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                best = best.min((a - b).norm());
            }
        }
        best
    }

    pub fn distance(&self, z: Complex64) -> f64 {
        self.points
            .iter()
            .map(|e| (e - z).norm())
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabeledFiber {
    pub base_point: Complex64,
    pub points: Vec<Complex64>,
}

/// A closed polyline based at the base point, winding once around `puncture`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Loop {
    pub puncture: Complex64,
    pub radius: f64,
    pub vertices: Vec<Complex64>,
}

/// A permutation of `Z_n`, `sigma[k]` being the image of `k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Permutation(pub Vec<usize>);

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(k, &s)| k == s)
    }

    /// Nontrivial cycles in order of their least element.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.0.len()];
        let mut out = Vec::new();
        for start in 0..self.0.len() {
            if seen[start] {
                continue;
            }
            let mut cycle = vec![start];
            seen[start] = true;
            let mut k = self.0[start];
            while k != start {
                seen[k] = true;
                cycle.push(k);
                k = self.0[k];
            }
            if cycle.len() > 1 {
                out.push(cycle);
            }
        }
        out
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cycles = self.cycles();
        if cycles.is_empty() {
            return write!(f, "()");
        }
        for c in cycles {
            let items: Vec<String> = c.iter().map(|x| x.to_string()).collect();
            write!(f, "({})", items.join(" "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonodromyResult {
    pub frame: AnnulusFrame,
    pub fiber: LabeledFiber,
    pub locus: BranchLocus,
    pub loops: Vec<Loop>,
    pub generators: Vec<Permutation>,
    pub partition: ZnPartition,
    pub q: usize,
    pub low_confidence: bool,
}

fn dedup_points(points: Vec<Complex64>, tol: f64) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = Vec::with_capacity(points.len());
    for p in points {
        if out.iter().all(|q| (p - q).norm() > tol) {
            out.push(p);
        }
    }
    out
}

pub fn branch_locus(phi: &FiniteBlaschkeProduct) -> Result<BranchLocus> {
    let critical_points = phi.critical_points()?;
    let mut values = Vec::new();
    for cp in &critical_points {
        values.push(phi.eval(cp.point)?);
    }
    let critical_values = dedup_points(values.clone(), 1e-10);
    let mut points = Vec::new();
    for &c in &critical_values {
        let mut fiber_points = fiber(phi, c)?.points;
        // a critical point of multiplicity m is an (m + 1)-fold root of
        // phi = c, which root finding splits into a small cluster; replace
        // the cluster by the critical point itself
        for (cp, &v) in critical_points.iter().zip(&values) {
            if (v - c).norm() > 1e-10 {
                continue;
            }
            for _ in 0..=cp.multiplicity {
                let nearest = fiber_points
                    .iter()
                    .enumerate()
                    .min_by(|x, y| {
                        (x.1 - cp.point)
                            .norm()
                            .partial_cmp(&(y.1 - cp.point).norm())
                            .unwrap()
                    })
                    .map(|(i, _)| i);
                if let Some(i) = nearest {
                    fiber_points.swap_remove(i);
                }
            }
            fiber_points.push(cp.point);
        }
        points.extend(fiber_points);
    }
    let mut points = dedup_points(points, LOCUS_DEDUP_TOL);
    points.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap()
            .then(a.im.partial_cmp(&b.im).unwrap())
    });
    Ok(BranchLocus {
        critical_points,
        critical_values,
        points,
    })
}

pub fn label_fiber(branch: &NthRootBranch, frame: &AnnulusFrame) -> Result<LabeledFiber> {
    Ok(LabeledFiber {
        base_point: frame.base_point,
        points: branch.labeled_fiber_at(frame.base_point)?,
    })
}

/// One lasso per locus point: a straight tail from the base point, a
/// counter-clockwise circle, and the tail back.
///
/// The circle radius stays below half the distance to the other punctures
/// and to the working circle, and below the distance to the other tails, so
/// the lassos form a standard generating set of the punctured disk.
pub fn make_loops(locus: &BranchLocus, frame: &AnnulusFrame) -> Result<Vec<Loop>> {
    let z0 = frame.base_point;
    let pts = &locus.points;
    if pts.is_empty() {
        return Err(Error::LoopPlanningFailure("branch locus is empty".into()));
    }
    let mut loops = Vec::with_capacity(pts.len());
    for (i, &e) in pts.iter().enumerate() {
        let mut radius = (frame.base_radius - e.norm()) / 2.0;
        for (j, &f) in pts.iter().enumerate() {
            if i == j {
                continue;
            }
            let d = (e - f).norm();
            if d < MATCH_TOL {
                return Err(Error::LoopPlanningFailure(format!(
                    "locus points {e} and {f} are too close"
                )));
            }
            radius = radius.min(d / 2.0).min(0.9 * segment_distance(e, z0, f));
        }
        if !(radius > 1e-9) {
            return Err(Error::LoopPlanningFailure(format!(
                "no room for a loop around {e}"
            )));
        }
        let dir = (z0 - e) / (z0 - e).norm();
        let approach = e + dir * radius;
        let theta0 = dir.arg();
        let mut vertices = vec![z0, approach];
        for k in 1..LOOP_VERTICES {
            vertices.push(
                e + Complex64::from_polar(radius, theta0 + TAU * k as f64 / LOOP_VERTICES as f64),
            );
        }
        vertices.push(approach);
        vertices.push(z0);
        loops.push(Loop {
            puncture: e,
            radius,
            vertices,
        });
    }
    Ok(loops)
}

/// The working circle traversed once counter-clockwise from the base point.
pub fn circle_path(frame: &AnnulusFrame, vertices: usize) -> Vec<Complex64> {
    let theta0 = frame.base_point.arg();
    let mut path: Vec<Complex64> = (0..vertices)
        .map(|k| {
            Complex64::from_polar(frame.base_radius, theta0 + TAU * k as f64 / vertices as f64)
        })
        .collect();
    path[0] = frame.base_point;
    path.push(frame.base_point);
    path
}

fn min_pairwise(points: &[Complex64]) -> f64 {
    let mut best = f64::INFINITY;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            best = best.min((a - b).norm());
        }
    }
    best
}

enum StepFailure {
    Newton,
    Collision(Complex64),
}

fn track_step(
    phi: &FiniteBlaschkeProduct,
    w: &[Complex64],
    z: Complex64,
    z_new: Complex64,
) -> std::result::Result<Vec<Complex64>, StepFailure> {
    let sep = min_pairwise(w).min(1.0);
    let target = phi.eval(z_new).map_err(|_| StepFailure::Newton)?;
    let dz = phi.derivative(z).map_err(|_| StepFailure::Newton)?;
    let mut out = Vec::with_capacity(w.len());
    for &wi in w {
        let dw = phi.derivative(wi).map_err(|_| StepFailure::Newton)?;
        let predicted = wi + dz / dw * (z_new - z);
        if !predicted.re.is_finite() || (predicted - wi).norm() > 0.5 * sep {
            return Err(StepFailure::Newton);
        }
        let next =
            newton_refine(phi, target, predicted, 0.25 * sep).map_err(|_| StepFailure::Newton)?;
        out.push(next);
    }
    if w.len() > 1 && min_pairwise(&out) < COLLISION_TOL {
        return Err(StepFailure::Collision(z_new));
    }
    Ok(out)
}

/// Continues every point of `start` along `path`, keeping
/// `phi(w_k) = phi(z)` for the current path point `z`.
pub fn continue_fiber(
    phi: &FiniteBlaschkeProduct,
    locus: &BranchLocus,
    path: &[Complex64],
    start: &[Complex64],
) -> Result<Vec<Complex64>> {
    if start.len() > 1 && min_pairwise(start) <= MATCH_TOL {
        return Err(Error::ContinuationCollision(path[0]));
    }
    let mut w = start.to_vec();
    let mut h = MAX_STEP;
    for seg in path.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let len = (b - a).norm();
        if len == 0.0 {
            continue;
        }
        let dir = (b - a) / len;
        let mut t = 0.0;
        while t < len {
            let z = a + dir * t;
            let cap = MAX_STEP.min(0.25 * locus.distance(z));
            h = h.min(cap).min(len - t);
            let mut halvings = 0;
            loop {
                let last = t + h >= len * (1.0 - 1e-14);
                let z_new = if last { b } else { a + dir * (t + h) };
                match track_step(phi, &w, z, z_new) {
                    Ok(next) => {
                        w = next;
                        t = if last { len } else { t + h };
                        break;
                    }
                    Err(failure) => {
                        halvings += 1;
                        if halvings > MAX_HALVINGS {
                            return Err(match failure {
                                StepFailure::Collision(p) => Error::ContinuationCollision(p),
                                StepFailure::Newton => Error::StepUnderflow(z),
                            });
                        }
                        h /= 2.0;
                    }
                }
            }
            h = (2.0 * h).min(MAX_STEP);
        }
    }
    let end = *path.last().expect("path is nonempty");
    let target = phi.eval(end)?;
    for &p in &w {
        if (phi.eval(p)? - target).norm() >= 1e-10 {
            return Err(Error::StepUnderflow(end));
        }
    }
    Ok(w)
}

/// Matches each tracked end point to the labeled start fiber.
pub fn match_fiber(labeled: &[Complex64], end: &[Complex64]) -> Result<Permutation> {
    let n = labeled.len();
    let mut sigma = Vec::with_capacity(n);
    let mut used = vec![false; n];
    for (k, &p) in end.iter().enumerate() {
        let mut dists: Vec<(f64, usize)> = labeled
            .iter()
            .enumerate()
            .map(|(l, q)| ((p - q).norm(), l))
            .collect();
        dists.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let (d1, l) = dists[0];
        if d1 >= MATCH_TOL {
            return Err(Error::MatchingAmbiguity(format!(
                "track {k} ends {d1:e} away from the fiber"
            )));
        }
        if n > 1 && dists[1].0 < 10.0 * d1 {
            return Err(Error::MatchingAmbiguity(format!(
                "track {k} has no clear nearest label"
            )));
        }
        if used[l] {
            return Err(Error::MatchingAmbiguity(format!("label {l} matched twice")));
        }
        used[l] = true;
        sigma.push(l);
    }
    if sigma[0] != 0 {
        return Err(Error::MatchingAmbiguity("the identity branch moved".into()));
    }
    Ok(Permutation(sigma))
}

pub fn monodromy_generator(
    phi: &FiniteBlaschkeProduct,
    locus: &BranchLocus,
    fiber: &LabeledFiber,
    lp: &Loop,
) -> Result<Permutation> {
    let end = continue_fiber(phi, locus, &lp.vertices, &fiber.points)?;
    match_fiber(&fiber.points, &end)
}

/// Orbits of the group generated by `generators`.
pub fn orbit_partition(generators: &[Permutation], n: usize) -> ZnPartition {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for g in generators {
        for (k, &s) in g.0.iter().enumerate() {
            let (a, b) = (find(&mut parent, k), find(&mut parent, s));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let labels: Vec<usize> = (0..n).map(|k| find(&mut parent, k)).collect();
    ZnPartition::from_labels(&labels)
}

/// Runs the full pipeline: locus, frame, labeling, loops, generators, orbits.
pub fn analyze(phi: &FiniteBlaschkeProduct) -> Result<MonodromyResult> {
    let n = phi.order();
    let branch = build_branch(phi);
    let locus = if n >= 2 {
        branch_locus(phi)?
    } else {
        BranchLocus {
            critical_points: Vec::new(),
            critical_values: Vec::new(),
            points: Vec::new(),
        }
    };
    let frame = choose_frame(&branch, &locus.points)?;
    let fiber = label_fiber(&branch, &frame)?;
    let loops = if locus.points.is_empty() {
        Vec::new()
    } else {
        make_loops(&locus, &frame)?
    };
    let generators = loops
        .par_iter()
        .map(|lp| monodromy_generator(phi, &locus, &fiber, lp))
        .collect::<Result<Vec<_>>>()?;
    let partition = orbit_partition(&generators, n);
    Ok(MonodromyResult {
        frame,
        q: partition.q(),
        partition,
        low_confidence: locus.min_separation() < LOW_CONFIDENCE_SEPARATION,
        fiber,
        locus,
        loops,
        generators,
    })
}

/// The polyline through the locus used for pictures: locus points sorted by
/// real part, preceded by the point of the unit circle above the first one.
pub fn gamma_polyline(locus: &BranchLocus) -> Vec<Complex64> {
    let mut pts = locus.points.clone();
    if pts.is_empty() {
        return pts;
    }
    pts.sort_by(|a, b| {
        a.re.partial_cmp(&b.re)
            .unwrap()
            .then(a.im.partial_cmp(&b.im).unwrap())
    });
    let x = pts[0].re;
    let start = Complex64::new(x, (1.0 - x * x).max(0.0).sqrt());
    let mut out = vec![start];
    out.extend(pts);
    out
}
