//! Intersection grids of billiard trajectories in confocal families.

use serde::{Deserialize, Serialize};

use crate::algebra3d::{s_skew, SkewClass};
use crate::confocal_core::{ConfocalFamily, Vector};
use crate::error::{Error, Result};
use crate::trajectory::{caustic_type_2d, classify_winding_2d, ConicType, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridMode {
    /// `l_i ∩ l_j` with `i - j = k`
    Difference,
    /// `l_i ∩ l_j` with `i + j = k`
    Sum,
    /// `a_m ∩ b_{m+k}` for two trajectories
    Pairs,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridSet {
    pub k: i64,
    pub mode: GridMode,
    pub points: Vec<[f64; 2]>,
    /// segment indices (relative to the origin) producing each point
    pub pairs: Vec<(i64, i64)>,
    pub skipped_parallel: usize,
    pub fitted_lambda: Option<f64>,
    pub residual: Option<f64>,
    pub conic_type: Option<ConicType>,
}

const PARALLEL_SIN: f64 = 1e-8;

fn meet_2d(t1: &Trajectory, i: usize, t2: &Trajectory, j: usize) -> Option<[f64; 2]> {
    let (p, v) = (&t1.points[i], &t1.directions[i]);
    let (q, w) = (&t2.points[j], &t2.directions[j]);
    let c = v[0] * w[1] - v[1] * w[0];
    if c.abs() < PARALLEL_SIN {
        return None;
    }
    let d = q - p;
    let t = (d[0] * w[1] - d[1] * w[0]) / c;
    Some([p[0] + t * v[0], p[1] + t * v[1]])
}

fn check_shared_caustics(t1: &Trajectory, t2: &Trajectory) -> Result<()> {
    if t1.family.a() != t2.family.a() {
        return Err(Error::CausticMismatch("trajectories live in different families".into()));
    }
    let scale = t1.family.scale(None);
    let diff = t1.caustics.max_relative_difference(&t2.caustics, scale);
    if diff > 1e-8 {
        return Err(Error::CausticMismatch(format!("caustics differ by {diff:e}")));
    }
    Ok(())
}

/// Intersection points of segment pairs. For a single trajectory the segment
/// index of position `p` is `p - origin`; for two trajectories `a_m ∩ b_{m+k}`.
pub fn collect_grid(t1: &Trajectory, t2: Option<&Trajectory>, k: i64, mode: GridMode, origin: usize) -> Result<GridSet> {
    if t1.family.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: t1.family.dim() });
    }
    let mut points = vec![];
    let mut pairs = vec![];
    let mut skipped = 0;
    let mut push = |a: &Trajectory, i: usize, b: &Trajectory, j: usize, label: (i64, i64)| match meet_2d(a, i, b, j) {
        Some(x) => {
            points.push(x);
            pairs.push(label);
        }
        None => skipped += 1,
    };
    let n1 = t1.points.len() as i64;
    match (t2, mode) {
        (Some(t2), GridMode::Pairs) => {
            check_shared_caustics(t1, t2)?;
            let n2 = t2.points.len() as i64;
            for m in 0..n1 {
                let j = m + k;
                if (0..n2).contains(&j) {
                    push(t1, m as usize, t2, j as usize, (m, j));
                }
            }
        }
        (None, GridMode::Difference) => {
            if k < 1 {
                return Err(Error::Validation("difference grids need k >= 1".into()));
            }
            for i in k..n1 {
                let j = i - k;
                push(t1, i as usize, t1, j as usize, (i - origin as i64, j - origin as i64));
            }
        }
        (None, GridMode::Sum) => {
            let o = origin as i64;
            for i in 0..n1 {
                let j = k + 2 * o - i;
                if j < i && j >= 0 {
                    push(t1, i as usize, t1, j as usize, (i - o, j - o));
                }
            }
        }
        _ => return Err(Error::Validation("pairs mode needs two trajectories, sum and difference need one".into())),
    }
    if points.is_empty() {
        return Err(Error::EmptyGrid);
    }
    Ok(GridSet { k, mode, points, pairs, skipped_parallel: skipped, fitted_lambda: None, residual: None, conic_type: None })
}

fn membership(f: &ConfocalFamily, lam: f64, x: &[f64; 2]) -> (f64, f64) {
    let a = f.a();
    let mut r = -1.0;
    let mut dr = 0.0;
    for i in 0..2 {
        let d = a[i] - lam;
        r += x[i] * x[i] / d;
        dr += x[i] * x[i] / (d * d);
    }
    (r, dr)
}

/// Confocal conic through the points, by least squares on the membership defect.
pub fn fit_confocal(f: &ConfocalFamily, points: &[[f64; 2]]) -> Result<(f64, f64)> {
    if f.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: f.dim() });
    }
    if points.len() < 2 {
        return Err(Error::Validation("at least two points are needed".into()));
    }
    let coords: Vec<Vec<f64>> = points
        .iter()
        .map(|p| f.elliptic_coordinates(&Vector::from_row_slice(p)).map(|c| c.lambda))
        .collect::<Result<_>>()?;
    let spread = |b: usize| {
        let lo = coords.iter().map(|c| c[b]).fold(f64::INFINITY, f64::min);
        let hi = coords.iter().map(|c| c[b]).fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    };
    let branch = if spread(0) <= spread(1) { 0 } else { 1 };
    let mut lam = coords.iter().map(|c| c[branch]).sum::<f64>() / coords.len() as f64;
    let a = f.a();
    let (lo, hi) = if branch == 0 { (f64::NEG_INFINITY, a[0]) } else { (a[0], a[1]) };
    for _ in 0..100 {
        let (mut g, mut h) = (0.0, 0.0);
        for p in points {
            let (r, dr) = membership(f, lam, p);
            g += r * dr;
            h += dr * dr;
        }
        if h == 0.0 {
            break;
        }
        let mut next = lam - g / h;
        if next <= lo || next >= hi {
            next = if next <= lo { 0.5 * (lam + if lo.is_finite() { lo } else { lam - 1.0 }) } else { 0.5 * (lam + hi) };
        }
        let done = (next - lam).abs() <= 1e-15 * (1.0 + lam.abs());
        lam = next;
        if done {
            break;
        }
    }
    let residual = points.iter().map(|p| membership(f, lam, p).0.abs()).fold(0.0, f64::max);
    if !residual.is_finite() || residual > 1e-4 {
        return Err(Error::NoFit(residual));
    }
    Ok((lam, residual))
}

pub fn conic_type_of(f: &ConfocalFamily, lam: f64) -> Result<ConicType> {
    let a = f.a();
    if lam < a[0] {
        Ok(ConicType::Ellipse)
    } else if lam < a[1] {
        Ok(ConicType::Hyperbola)
    } else {
        Err(Error::InvalidCoords(format!("{lam} is not below a_2")))
    }
}

impl GridSet {
    pub fn fit(&mut self, f: &ConfocalFamily) -> Result<()> {
        let (lam, res) = fit_confocal(f, &self.points)?;
        self.fitted_lambda = Some(lam);
        self.residual = Some(res);
        self.conic_type = Some(conic_type_of(f, lam)?);
        Ok(())
    }
}

/// What the prediction is based on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum GridRelation {
    /// one trajectory, `P_k` (difference) or `Q_k` (sum)
    Single { mode: GridMode, k: i64 },
    /// two trajectories: same winding about an elliptic caustic, or same
    /// direction of crossing the focal axis for a hyperbolic caustic
    Pair { same: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridClassification {
    pub caustic_type: ConicType,
    pub observed: ConicType,
    pub predicted: ConicType,
    pub consistent: bool,
}

pub fn predicted_type(caustic: ConicType, rel: GridRelation) -> ConicType {
    use ConicType::*;
    match (caustic, rel) {
        (Ellipse, GridRelation::Single { mode: GridMode::Sum, .. }) => Hyperbola,
        (Ellipse, GridRelation::Single { .. }) => Ellipse,
        (Hyperbola, GridRelation::Single { k, .. }) => {
            if k % 2 == 0 {
                Ellipse
            } else {
                Hyperbola
            }
        }
        (Ellipse, GridRelation::Pair { same }) => {
            if same {
                Ellipse
            } else {
                Hyperbola
            }
        }
        (Hyperbola, GridRelation::Pair { same }) => {
            if same {
                Hyperbola
            } else {
                Ellipse
            }
        }
    }
}

pub fn classify_grid(f: &ConfocalFamily, caustic_alpha: f64, rel: GridRelation, fitted_lambda: f64) -> Result<GridClassification> {
    let caustic_type = caustic_type_2d(f, caustic_alpha)?;
    let observed = conic_type_of(f, fitted_lambda)?;
    let predicted = predicted_type(caustic_type, rel);
    Ok(GridClassification { caustic_type, observed, predicted, consistent: observed == predicted })
}

/// Whether `a_m` and `b_{m+k}` wind the same way (elliptic caustic) or cross the
/// focal axis the same way (hyperbolic caustic); `None` if this changes with `m`.
pub fn pair_relation(t1: &Trajectory, t2: &Trajectory, k: i64) -> Result<Option<bool>> {
    check_shared_caustics(t1, t2)?;
    let w1 = classify_winding_2d(t1)?;
    let w2 = classify_winding_2d(t2)?;
    let mut rel = None;
    for m in 0..w1.signs.len() as i64 {
        let j = m + k;
        if j < 0 || j >= w2.signs.len() as i64 {
            continue;
        }
        let same = w1.signs[m as usize] == w2.signs[j as usize];
        match rel {
            None => rel = Some(same),
            Some(r) if r != same => return Ok(None),
            _ => {}
        }
    }
    Ok(rel)
}

/// Points of a hyperbolic grid occupy at most one pair of centrally symmetric
/// half-branches (branch by the sign of `x_2`, half by the sign of `x_1`).
pub fn half_branch_check(points: &[[f64; 2]]) -> bool {
    let scale = points.iter().map(|p| p[0].abs().max(p[1].abs())).fold(0.0, f64::max);
    let eps = 1e-9 * scale.max(1.0);
    let sign = |x: f64| if x > eps { 1 } else if x < -eps { -1 } else { 0 };
    let mut labels: Vec<(i32, i32)> = vec![];
    for p in points {
        let l = (sign(p[1]), sign(p[0]));
        if !labels.contains(&l) {
            labels.push(l);
        }
    }
    match labels.len() {
        0 | 1 => true,
        2 => {
            let (a, b) = (labels[0], labels[1]);
            a.0 == -b.0 && a.1 == -b.1 && a.0 != 0
        }
        _ => false,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SkewProfile {
    pub classes: Vec<SkewClass>,
    pub s_constant: bool,
    /// largest deviation of the connecting quadrics from those at the first index
    pub quadric_spread: f64,
}

/// Skewness of `(a_m, b_m)` along two trajectories in space.
pub fn grid_skew_profile(t1: &Trajectory, t2: &Trajectory, m_range: std::ops::Range<usize>) -> Result<SkewProfile> {
    if t1.family.dim() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, got: t1.family.dim() });
    }
    check_shared_caustics(t1, t2)?;
    let mut classes = vec![];
    for m in m_range {
        if m >= t1.points.len() || m >= t2.points.len() {
            break;
        }
        classes.push(s_skew(&t1.family, &t1.directed(m), &t2.directed(m))?);
    }
    if classes.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let s_constant = classes.iter().all(|c| c.s == classes[0].s);
    let first = &classes[0].connecting_quadrics;
    let quadric_spread = classes
        .iter()
        .map(|c| {
            if c.connecting_quadrics.len() != first.len() {
                f64::INFINITY
            } else {
                c.connecting_quadrics.iter().zip(first).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
            }
        })
        .fold(0.0, f64::max);
    Ok(SkewProfile { classes, s_constant, quadric_spread })
}
