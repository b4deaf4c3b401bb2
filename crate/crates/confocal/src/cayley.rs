//! `P(x) = prod (a_i - x) prod (alpha_j - x)`, the Taylor series of `sqrt P`,
//! Hankel rank conditions for periodic and s-weak trajectories, and caustic search.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::confocal_core::{CausticSet, ConfocalFamily, Vector};
use crate::error::{Error, Result};
use crate::poly::{bisect, Poly};
use crate::reflection::Mode;
use crate::trajectory::{closure_gap, simulate, simulate_sequence};

/// `P(x)` as a dense polynomial of degree `2d - 1`.
pub fn build_p(f: &ConfocalFamily, c: &CausticSet) -> Result<Poly> {
    if c.alpha.len() + 1 != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim() - 1, got: c.alpha.len() });
    }
    let roots: Vec<f64> = f.a().iter().chain(&c.alpha).copied().collect();
    Ok(Poly::from_root_factors(&roots))
}

/// Taylor coefficients `B_0..B_N` of `sqrt P(x0 + t)` with `B_0 = +sqrt P(x0)`.
pub fn sqrt_taylor(p: &Poly, x0: f64, n: usize) -> Result<Vec<f64>> {
    let c = p.taylor_shift(x0).0;
    let scale = c.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    if c[0] <= 1e-12 * scale {
        return Err(Error::BranchPoint(c[0]));
    }
    let mut b = vec![c[0].sqrt()];
    for k in 1..=n {
        let s: f64 = (1..k).map(|j| b[j] * b[k - j]).sum();
        let ck = c.get(k).copied().unwrap_or(0.0);
        b.push((ck - s) / (2.0 * b[0]));
    }
    Ok(b)
}

/// Count of singular values above `rel * sigma_1` (zero below an absolute floor).
pub fn numerical_rank(m: &DMatrix<f64>, rel: f64) -> (usize, Vec<f64>) {
    if m.nrows() == 0 || m.ncols() == 0 {
        return (0, vec![]);
    }
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    if sv[0] < 1e-14 {
        return (0, sv);
    }
    let r = sv.iter().filter(|s| **s > rel * sv[0]).count();
    (r, sv)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CayleyKind {
    Periodic { n: usize },
    Weak { r: usize, s: i64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CayleyReport {
    pub kind: CayleyKind,
    pub expansion_point: f64,
    /// raw Taylor coefficients `B_0..B_N`
    pub b: Vec<f64>,
    /// distance from the expansion point to the nearest root of P
    pub rho: f64,
    pub rows: usize,
    pub cols: usize,
    /// coefficient index of each entry, row-major
    pub indices: Vec<usize>,
    /// raw entries, row-major
    pub matrix: Vec<f64>,
    /// singular values of the matrix with entries `B_k rho^k`
    pub singular_values: Vec<f64>,
    /// largest `|B_k rho^k|` over the series, used as `sigma_0`
    pub series_scale: f64,
    /// consecutive ratios `sigma_i / sigma_{i-1}`
    pub gap_ratios: Vec<f64>,
    pub numerical_rank: usize,
    /// rank from the plain relative threshold `sigma_i > tol sigma_1`
    pub plain_rank: usize,
    pub threshold_rank: i64,
    pub tolerance: f64,
    /// smallest gap ratio up to the threshold position (0 if structurally deficient)
    pub deficiency: f64,
    pub satisfied: bool,
}

impl CayleyReport {
    /// Matrix entries with the column order reversed (row-major).
    pub fn columns_reversed(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.matrix.len());
        for i in 0..self.rows {
            for j in (0..self.cols).rev() {
                out.push(self.matrix[i * self.cols + j]);
            }
        }
        out
    }
}

fn nearest_root_distance(f: &ConfocalFamily, c: &CausticSet, x0: f64) -> f64 {
    f.a().iter().chain(&c.alpha).map(|r| (r - x0).abs()).fold(f64::INFINITY, f64::min)
}

fn hankel_report(
    kind: CayleyKind,
    b: Vec<f64>,
    x0: f64,
    rho: f64,
    rows: i64,
    cols: i64,
    threshold: i64,
    index: impl Fn(usize, usize) -> usize,
    tol: f64,
) -> CayleyReport {
    let scaled: Vec<f64> = b.iter().enumerate().map(|(k, v)| v * rho.powi(k as i32)).collect();
    let series_scale = scaled.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let (r, c) = (rows.max(0) as usize, cols.max(0) as usize);
    let mut indices = Vec::with_capacity(r * c);
    for i in 0..r {
        for j in 0..c {
            indices.push(index(i, j));
        }
    }
    let matrix: Vec<f64> = indices.iter().map(|&k| b[k]).collect();
    let m = DMatrix::from_fn(r, c, |i, j| scaled[indices[i * c + j]]);
    let (plain_rank, sv) = numerical_rank(&m, tol);
    let mut gap_ratios = Vec::with_capacity(sv.len());
    let mut prev = series_scale;
    for s in &sv {
        gap_ratios.push(if prev > 0.0 { s / prev } else { 0.0 });
        prev = *s;
    }
    let numerical_rank = gap_ratios.iter().take_while(|g| **g > tol).count();
    let (deficiency, satisfied) = if threshold <= 0 {
        (f64::INFINITY, false)
    } else {
        let t = threshold as usize;
        let d = if sv.len() < t { 0.0 } else { gap_ratios[..t].iter().copied().fold(f64::INFINITY, f64::min) };
        (d, numerical_rank < t)
    };
    CayleyReport {
        kind,
        expansion_point: x0,
        b,
        rho,
        rows: r,
        cols: c,
        indices,
        matrix,
        singular_values: sv,
        series_scale,
        gap_ratios,
        numerical_rank,
        plain_rank,
        threshold_rank: threshold,
        tolerance: tol,
        deficiency,
        satisfied,
    }
}

/// Periodicity condition: rows `(B_{n+1} .. B_{d+1})` through `(B_{2n-1} .. B_{n+d-1})`,
/// satisfied when the rank drops below `n - d + 1`. Expansion about 0.
pub fn cayley_periodic(f: &ConfocalFamily, c: &CausticSet, n: usize) -> Result<CayleyReport> {
    let d = f.dim();
    if n < d {
        return Err(Error::Validation(format!("period {n} is below the dimension {d}")));
    }
    let p = build_p(f, c)?;
    let b = sqrt_taylor(&p, 0.0, 2 * n)?;
    let rho = nearest_root_distance(f, c, 0.0);
    Ok(hankel_report(
        CayleyKind::Periodic { n },
        b,
        0.0,
        rho,
        n as i64 - 1,
        (n - d + 1) as i64,
        (n - d + 1) as i64,
        |i, j| n + 1 + i - j,
        f.tol.rank,
    ))
}

/// s-weak condition about the regular point `x0`.
pub fn cayley_weak(f: &ConfocalFamily, c: &CausticSet, r: usize, s: i64, x0: f64) -> Result<CayleyReport> {
    let d = f.dim() as i64;
    if s < -1 || s > d - 2 {
        return Err(Error::InvalidSkew(s));
    }
    if r == 0 {
        return Err(Error::Validation("length must be positive".into()));
    }
    let p = build_p(f, c)?;
    let total = r as i64 + s + 1;
    let m = total / 2;
    let (rows, cols, threshold, shift) = if total % 2 == 0 {
        (m - s - 2, m - d + 1, m - d + 1, d + 1)
    } else {
        (m - s - 1, m - d + 2, m - d + 2, d)
    };
    let last = if rows > 0 && cols > 0 { shift + rows + cols - 2 } else { 0 };
    let n_series = last.max(r as i64 + s + 2).max(1) as usize;
    let b = sqrt_taylor(&p, x0, n_series)?;
    let rho = nearest_root_distance(f, c, x0);
    let shift = shift as usize;
    Ok(hankel_report(
        CayleyKind::Weak { r, s },
        b,
        x0,
        rho,
        rows,
        cols,
        threshold,
        |i, j| shift + i + j,
        f.tol.rank,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResult {
    pub alpha: Vec<f64>,
    /// closure gap of the start state after the searched number of bounces
    pub closure_gap: f64,
    /// for d = 3: mismatch of elliptic coordinates after n bounces and the
    /// geometric gap after 2n bounces
    pub lambda_gap: Option<f64>,
    pub geometric_gap_2n: Option<f64>,
}

/// Total signed rotation angle of the reflection points about the centre.
fn rotation_2d(points: &[Vector]) -> f64 {
    let th = |p: &Vector| p[1].atan2(p[0]);
    points
        .windows(2)
        .map(|w| {
            let mut d = th(&w[1]) - th(&w[0]);
            while d > std::f64::consts::PI {
                d -= 2.0 * std::f64::consts::PI;
            }
            while d <= -std::f64::consts::PI {
                d += 2.0 * std::f64::consts::PI;
            }
            d
        })
        .sum()
}

/// Start state used by the search: a boundary point and an inward direction
/// tangent to `alpha`, placed on the coordinate plane of the lower end of the
/// oscillation range of the second elliptic coordinate.
pub fn search_start(f: &ConfocalFamily, lam_boundary: f64, alpha: &[f64]) -> Result<(Vector, Vector)> {
    let d = f.dim();
    let a = f.a();
    let mut lambda = vec![lam_boundary];
    for s in 1..d {
        // the range of lambda_s lies between a_{s-1} and a_s; start at its lower end
        let lo = a[s - 1];
        let hi = alpha.iter().copied().filter(|al| *al > lo && *al < a[s]).fold(a[s], f64::min);
        lambda.push(if s == 1 { lo } else { 0.5 * (lo + hi) });
    }
    let x = f.point_from_elliptic(&lambda, &vec![1.0; d])?;
    let v = f.direction_from_caustics(&x, alpha, &vec![1.0; d])?;
    let n = f.unit_normal(lam_boundary, &x)?;
    let v = if v.dot(&n) > 0.0 { -v } else { v };
    Ok((x, v))
}

/// Maximum mismatch of the elliptic coordinates of the first and n-th vertex.
pub fn lambda_gap(f: &ConfocalFamily, x0: &Vector, xn: &Vector) -> Result<f64> {
    let l0 = f.elliptic_coordinates(x0)?.lambda;
    let ln = f.elliptic_coordinates(xn)?.lambda;
    Ok(l0.iter().zip(&ln).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
}

/// Bisection on a signed closure gap for the unknown caustic.
///
/// d = 2: the single caustic is searched so that the reflection points turn
/// once around the centre in `n` bounces. d = 3: with `fixed` caustic given,
/// the other caustic is searched so that the n-th reflection point returns to
/// the coordinate plane of the start.
pub fn caustic_search(
    f: &ConfocalFamily,
    lam_boundary: f64,
    n: usize,
    bracket: (f64, f64),
    fixed: Option<f64>,
) -> Result<SearchResult> {
    let d = f.dim();
    match (d, fixed) {
        (2, None) => {
            let gap = |al: f64| -> f64 {
                let run = || -> Result<f64> {
                    let (x, v) = search_start(f, lam_boundary, &[al])?;
                    let t = simulate(f, lam_boundary, &x, &v, n)?;
                    Ok(rotation_2d(&t.points).abs() - 2.0 * std::f64::consts::PI)
                };
                run().unwrap_or(f64::NAN)
            };
            let (lo, hi) = shrink_bracket(&gap, bracket);
            let al = bisect(gap, lo, hi, 1e-13).ok_or(Error::NoSignChange(bracket.0, bracket.1))?;
            let (x, v) = search_start(f, lam_boundary, &[al])?;
            let t = simulate(f, lam_boundary, &x, &v, n)?;
            Ok(SearchResult { alpha: vec![al], closure_gap: closure_gap(&t, n), lambda_gap: None, geometric_gap_2n: None })
        }
        (3, Some(a1)) => {
            let gap = |al: f64| -> f64 {
                let run = || -> Result<f64> {
                    let alpha = sorted(&[a1, al]);
                    let (x, v) = search_start(f, lam_boundary, &alpha)?;
                    let t = simulate(f, lam_boundary, &x, &v, n)?;
                    Ok(t.points[n][0])
                };
                run().unwrap_or(f64::NAN)
            };
            let (lo, hi) = shrink_bracket(&gap, bracket);
            let al = bisect(gap, lo, hi, 1e-13).ok_or(Error::NoSignChange(bracket.0, bracket.1))?;
            let alpha = sorted(&[a1, al]);
            let (x, v) = search_start(f, lam_boundary, &alpha)?;
            let t = simulate_sequence(f, &vec![lam_boundary; 2 * n], &vec![Mode::Real; 2 * n], &x, &v)?;
            Ok(SearchResult {
                closure_gap: t.points[n][0].abs(),
                lambda_gap: Some(lambda_gap(f, &t.points[0], &t.points[n])?),
                geometric_gap_2n: Some(closure_gap(&t, 2 * n)),
                alpha,
            })
        }
        _ => Err(Error::Validation("search supports d = 2, or d = 3 with one caustic fixed".into())),
    }
}

/// Signed distance between two lines in space, `(q - p).(v x w) / |v x w|`.
pub fn signed_line_distance(p: &Vector, v: &Vector, q: &Vector, w: &Vector) -> f64 {
    let c = v.cross(w);
    let n = c.norm();
    if n < 1e-14 {
        let d = q - p;
        return (&d - v * d.dot(v)).norm();
    }
    (q - p).dot(&c) / n
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CentralMeetResult {
    pub alpha: Vec<f64>,
    /// signed distance between the centrally reflected initial segment and segment `r`
    pub gap: f64,
}

/// d = 3 search for the caustic (other than `fixed`) such that segment `r`
/// meets the image of the initial segment under `x -> -x`.
pub fn central_meet_search(f: &ConfocalFamily, lam_boundary: f64, r: usize, bracket: (f64, f64), fixed: f64) -> Result<CentralMeetResult> {
    if f.dim() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, got: f.dim() });
    }
    let eval = |al: f64| -> Result<f64> {
        let alpha = sorted(&[fixed, al]);
        let (x, v) = search_start(f, lam_boundary, &alpha)?;
        central_meet_gap(f, lam_boundary, &x, &v, r)
    };
    let gap = |al: f64| eval(al).unwrap_or(f64::NAN);
    let (lo, hi) = shrink_bracket(&gap, bracket);
    let al = bisect(gap, lo, hi, 1e-14).ok_or(Error::NoSignChange(bracket.0, bracket.1))?;
    Ok(CentralMeetResult { alpha: sorted(&[fixed, al]), gap: eval(al)? })
}

/// Signed distance between `-l_0` and `l_r` for the trajectory from `(x, v)`.
pub fn central_meet_gap(f: &ConfocalFamily, lam_boundary: f64, x: &Vector, v: &Vector, r: usize) -> Result<f64> {
    let t = simulate(f, lam_boundary, x, v, r)?;
    Ok(signed_line_distance(&(-x), &(-v), &t.points[r], &t.directions[r]))
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

/// Pull bracket ends inward until the gap evaluates to a finite number.
fn shrink_bracket(g: &dyn Fn(f64) -> f64, (mut lo, mut hi): (f64, f64)) -> (f64, f64) {
    let w = hi - lo;
    for k in 0..40 {
        if g(lo).is_finite() {
            break;
        }
        lo += w * 1e-9 * 2f64.powi(k);
    }
    for k in 0..40 {
        if g(hi).is_finite() {
            break;
        }
        hi -= w * 1e-9 * 2f64.powi(k);
    }
    (lo, hi)
}
