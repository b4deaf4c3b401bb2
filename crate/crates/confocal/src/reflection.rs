//! Real and virtual reflection, reflection-law checks and double reflection
//! configurations.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::confocal_core::{ConfocalFamily, DirectedLine, Hyperplane, Line, Vector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Real,
    Virtual,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LawVariant {
    Metric,
    /// cross-ratio test; the pole is taken with respect to `Q_aux`
    Harmonic { aux: f64 },
}

pub fn mirror(v: &Vector, n: &Vector) -> Vector {
    v - n * (2.0 * v.dot(n))
}

pub fn reflect(f: &ConfocalFamily, lam: f64, x: &Vector, dir_in: &Vector, mode: Mode) -> Result<Vector> {
    let val = f.value(lam, x);
    f.quadric_eval_grad(lam, x)?;
    if val.abs() > f.tol.on_quadric {
        return Err(Error::NotOnQuadric(val));
    }
    let n = f.unit_normal(lam, x)?;
    let d = dir_in / dir_in.norm();
    let c = d.dot(&n);
    if c.abs() <= f.tol.incidence {
        return Err(Error::TangentialIncidence(c.abs()));
    }
    let out = mirror(&d, &n);
    Ok(match mode {
        Mode::Real => out,
        Mode::Virtual => -out,
    })
}

fn check_incidence(f: &ConfocalFamily, lam: f64, x: &Vector, l1: &Line, l2: &Line) -> Result<()> {
    let val = f.value(lam, x);
    if val.abs() > f.tol.on_quadric.max(1e-9) {
        return Err(Error::NotOnQuadric(val));
    }
    if !l1.contains(x, 1e-9) || !l2.contains(x, 1e-9) {
        return Err(Error::LinesNotConcurrent);
    }
    Ok(())
}

fn det2(a: (f64, f64), b: (f64, f64)) -> f64 {
    a.0 * b.1 - a.1 * b.0
}

/// Cross-ratio `(l1, l2; normal, tangent trace)` of four concurrent coplanar lines,
/// or `None` when the normal leaves the plane of `l1, l2` or the pencil is degenerate.
pub fn harmonic_cross_ratio(d1: &Vector, d2: &Vector, dn: &Vector) -> Option<f64> {
    let e1 = d1 / d1.norm();
    let mut e2 = d2 - &e1 * d2.dot(&e1);
    if e2.norm() < 1e-12 {
        return None;
    }
    e2 /= e2.norm();
    let n = dn / dn.norm();
    let (n1, n2) = (n.dot(&e1), n.dot(&e2));
    if (n1 * n1 + n2 * n2 - 1.0).abs() > 1e-8 {
        return None;
    }
    let a = (1.0, 0.0);
    let b = (d2.dot(&e1), d2.dot(&e2));
    let c = (n1, n2);
    let t = (n2, -n1);
    let den = det2(a, t) * det2(b, c);
    if den.abs() < 1e-300 {
        return None;
    }
    Some(det2(a, c) * det2(b, t) / den)
}

pub fn reflection_law_check(
    f: &ConfocalFamily,
    lam: f64,
    x: &Vector,
    l1: &Line,
    l2: &Line,
    variant: LawVariant,
) -> Result<bool> {
    check_incidence(f, lam, x, l1, l2)?;
    let n = f.unit_normal(lam, x)?;
    let c = l1.v.dot(&n);
    if c.abs() <= f.tol.incidence || l2.v.dot(&n).abs() <= f.tol.incidence {
        return Ok(false);
    }
    let metric = {
        let r = mirror(&l1.v, &n);
        let off = &l2.v - &r * l2.v.dot(&r);
        off.norm() < 1e-8
    };
    match variant {
        LawVariant::Metric => Ok(metric),
        LawVariant::Harmonic { aux } => {
            if (aux - lam).abs() < f.tol.degenerate {
                return Err(Error::DegenerateConfiguration("auxiliary quadric equals the mirror".into()));
            }
            let h = f.tangent_hyperplane(lam, x)?;
            let z = f.pole_of_hyperplane(aux, &h)?;
            let dn = &z - x;
            if 1.0 - c.abs() < 1e-12 {
                // normal incidence: the pencil collapses onto the normal line
                return Ok(metric);
            }
            Ok(match harmonic_cross_ratio(&l1.v, &l2.v, &dn) {
                Some(cr) => (cr + 1.0).abs() < 1e-8,
                None => false,
            })
        }
    }
}

/// Four lines of a double reflection configuration, stored in the order
/// `l1, l2, l1', l2'`, with reflection points `x1, y1, y2, x2`.
#[derive(Debug, Clone)]
pub struct DrcQuad {
    pub lines: [Line; 4],
    /// orientations induced by the orientation of `l1` through real reflections
    pub directed: [DirectedLine; 4],
    pub points: [Vector; 4],
    pub quadric_params: (f64, f64),
    /// tangent planes at `x1, y1, y2, x2`
    pub tangent_planes: [Hyperplane; 4],
}

impl DrcQuad {
    /// (line a, line b, point, quadric) for the four reflections of the configuration.
    pub fn law_pairs(&self) -> [(usize, usize, usize, f64); 4] {
        let (l1, l2) = self.quadric_params;
        [(0, 1, 0, l1), (0, 2, 1, l2), (1, 3, 2, l2), (2, 3, 3, l1)]
    }

    pub fn law_checks(&self, f: &ConfocalFamily, variant: LawVariant) -> Result<[bool; 4]> {
        let mut out = [false; 4];
        for (k, (a, b, p, lam)) in self.law_pairs().into_iter().enumerate() {
            let v = match variant {
                LawVariant::Harmonic { .. } => {
                    let (l1, l2) = self.quadric_params;
                    LawVariant::Harmonic { aux: if lam == l1 { l2 } else { l1 } }
                }
                m => m,
            };
            out[k] = reflection_law_check(f, lam, &self.points[p], &self.lines[a], &self.lines[b], v)?;
        }
        Ok(out)
    }

    pub fn pencil(&self) -> PencilReport {
        pencil_check(&self.tangent_planes, 1e-9)
    }

    /// Largest distance from each line of `other` to the nearest line of `self`.
    pub fn set_distance(&self, other: &DrcQuad) -> f64 {
        other
            .lines
            .iter()
            .map(|l| self.lines.iter().map(|m| m.distance(l)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    }
}

fn second_intersection(f: &ConfocalFamily, lam: f64, from: &Vector, toward: &Vector) -> Result<Vector> {
    let v = toward - from;
    let nv = v.norm();
    if nv < 1e-12 {
        return Err(Error::DegenerateConfiguration("pole coincides with the point".into()));
    }
    let v = v / nv;
    let i = f.intersect_params(lam, from, &v)?;
    if i.count < 2 {
        return Err(Error::DegenerateConfiguration("secant is tangent".into()));
    }
    let t = if i.params[0].abs() > i.params[1].abs() { i.params[0] } else { i.params[1] };
    if t.abs() < 1e-9 * f.scale(Some(from)).sqrt() {
        return Err(Error::DegenerateConfiguration("second intersection coincides".into()));
    }
    Ok(from + v * t)
}

/// Double reflection configuration seeded by the oriented line `l1` meeting
/// `Q_lam1` at `x1` and `Q_lam2` at `y1`.
pub fn build_drc_at(
    f: &ConfocalFamily,
    lam1: f64,
    x1: &Vector,
    lam2: f64,
    y1: &Vector,
    dir: &Vector,
) -> Result<DrcQuad> {
    let scale = f.scale(Some(x1)).sqrt();
    if (x1 - y1).norm() < 1e-9 * scale {
        return Err(Error::DegenerateConfiguration("x1 and y1 coincide".into()));
    }
    let u1 = f.tangent_hyperplane(lam1, x1)?;
    let v1 = f.tangent_hyperplane(lam2, y1)?;
    let z1 = f.pole_of_hyperplane(lam2, &u1)?;
    let w1 = f.pole_of_hyperplane(lam1, &v1)?;
    let x2 = second_intersection(f, lam1, x1, &w1)?;
    let y2 = second_intersection(f, lam2, y1, &z1)?;
    if (&x2 - x1).norm() < 1e-9 * scale || (&y2 - y1).norm() < 1e-9 * scale {
        return Err(Error::DegenerateConfiguration("x2 or y2 coincides with the seed".into()));
    }
    let v = dir / dir.norm();
    let n_x1 = f.unit_normal(lam1, x1)?;
    let n_y1 = f.unit_normal(lam2, y1)?;
    let n_y2 = f.unit_normal(lam2, &y2)?;
    let v2 = mirror(&v, &n_x1);
    let v1p = mirror(&v, &n_y1);
    let v2p = mirror(&v2, &n_y2);
    let orient = |p: &Vector, q: &Vector, want: &Vector| -> Result<DirectedLine> {
        let mut d = q - p;
        if d.dot(want) < 0.0 {
            d = -d;
        }
        DirectedLine::new(p, &d)
    };
    let directed = [
        DirectedLine::new(x1, &v)?,
        orient(x1, &y2, &v2)?,
        orient(y1, &x2, &v1p)?,
        orient(&x2, &y2, &v2p)?,
    ];
    let lines = [directed[0].line(), directed[1].line(), directed[2].line(), directed[3].line()];
    let tangent_planes = [u1, v1, f.tangent_hyperplane(lam2, &y2)?, f.tangent_hyperplane(lam1, &x2)?];
    Ok(DrcQuad {
        lines,
        directed,
        points: [x1.clone(), y1.clone(), y2, x2],
        quadric_params: (lam1, lam2),
        tangent_planes,
    })
}

/// `build_drc` with the intersection points selected by index (ascending line parameter).
pub fn build_drc(f: &ConfocalFamily, lam1: f64, lam2: f64, ell1: &DirectedLine, i1: usize, i2: usize) -> Result<DrcQuad> {
    let a = f.intersect_params(lam1, &ell1.p, &ell1.v)?;
    let b = f.intersect_params(lam2, &ell1.p, &ell1.v)?;
    if a.count == 0 || b.count == 0 {
        return Err(Error::NoRealIntersection);
    }
    if a.count == 1 || b.count == 1 {
        return Err(Error::DegenerateConfiguration("line is tangent to a mirror".into()));
    }
    if i1 > 1 || i2 > 1 {
        return Err(Error::DegenerateConfiguration("intersection index must be 0 or 1".into()));
    }
    build_drc_at(f, lam1, &a.points[i1], lam2, &b.points[i2], &ell1.v)
}

/// Rebuild the configuration from each of its four lines and return the largest
/// set distance to the original.
pub fn drc_symmetry_gap(f: &ConfocalFamily, q: &DrcQuad) -> Result<f64> {
    let (l1, l2) = q.quadric_params;
    let [x1, y1, y2, x2] = &q.points;
    let seeds = [(x1, y1, 0), (x1, y2, 1), (x2, y1, 2), (x2, y2, 3)];
    let mut gap = 0.0f64;
    for (x, y, k) in seeds {
        let r = build_drc_at(f, l1, x, l2, y, &q.directed[k].v)?;
        gap = gap.max(q.set_distance(&r)).max(r.set_distance(q));
    }
    Ok(gap)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PencilReport {
    pub rank: usize,
    pub ratio: f64,
    pub is_pencil: bool,
    pub singular_values: Vec<f64>,
}

pub fn pencil_check(planes: &[Hyperplane], rel: f64) -> PencilReport {
    let rows = planes.len();
    let cols = planes.first().map(|h| h.u.len()).unwrap_or(0);
    if rows == 0 || cols == 0 {
        return PencilReport { rank: 0, ratio: 0.0, is_pencil: true, singular_values: vec![] };
    }
    let m = DMatrix::from_fn(rows, cols, |i, j| {
        let u = &planes[i].u;
        let n = u.iter().map(|c| c * c).sum::<f64>().sqrt();
        u[j] / n
    });
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let s1 = sv[0];
    let rank = if s1 < 1e-14 { 0 } else { sv.iter().filter(|s| **s > rel * s1).count() };
    let ratio = if sv.len() >= 3 && s1 > 0.0 { sv[2] / s1 } else { 0.0 };
    PencilReport { rank, ratio, is_pencil: rank <= 2, singular_values: sv }
}
