//! Confocal families `sum x_i^2 / (a_i - lambda) = 1`, elliptic coordinates,
//! tangent hyperplanes and poles, line intersections and caustics.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Poly;

pub type Vector = DVector<f64>;

pub fn vector(xs: &[f64]) -> Vector {
    DVector::from_column_slice(xs)
}

/// Numerical thresholds shared by every module. All are relative to the
/// problem scale unless noted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// |lambda - a_i| below which a quadric is degenerate (absolute).
    pub degenerate: f64,
    /// membership residual for points on a quadric.
    pub on_quadric: f64,
    /// relative discriminant below which a line is tangent.
    pub tangency: f64,
    /// |v.n| below which incidence is tangential.
    pub incidence: f64,
    /// sigma_3 / sigma_1 threshold of the pencil test.
    pub pencil: f64,
    /// relative singular value threshold of Cayley rank verdicts.
    pub rank: f64,
    /// canonical line comparison.
    pub line: f64,
    /// closure detection.
    pub closure: f64,
    /// distance below which two lines are considered intersecting.
    pub meet: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            degenerate: 1e-12,
            on_quadric: 1e-9,
            tangency: 1e-10,
            incidence: 1e-10,
            pencil: 1e-9,
            rank: 1e-8,
            line: 1e-9,
            closure: 1e-7,
            meet: 1e-8,
        }
    }
}

impl Tolerances {
    /// Set one threshold by name, as used by `--tol name=value`.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let slot = match name {
            "degenerate" => &mut self.degenerate,
            "on_quadric" => &mut self.on_quadric,
            "tangency" => &mut self.tangency,
            "incidence" => &mut self.incidence,
            "pencil" => &mut self.pencil,
            "rank" => &mut self.rank,
            "line" => &mut self.line,
            "closure" => &mut self.closure,
            "meet" => &mut self.meet,
            _ => return Err(Error::Validation(format!("unknown tolerance '{name}'"))),
        };
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::Validation(format!("tolerance '{name}' must be positive")));
        }
        *slot = value;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfocalFamily {
    a: Vec<f64>,
    pub tol: Tolerances,
}

/// Affine line in canonical form: `p` is the foot of the perpendicular from
/// the origin, `v` a unit vector whose first clearly nonzero component is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub p: Vector,
    pub v: Vector,
}

/// Oriented line: foot point plus unit direction, no sign normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectedLine {
    pub p: Vector,
    pub v: Vector,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EllipticCoords {
    pub lambda: Vec<f64>,
    /// indices i with lambda coinciding with some a_j
    pub degenerate: Vec<usize>,
}

/// `u0 + u1 x1 + ... + ud xd = 0` with `|(u1..ud)| = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hyperplane {
    pub u: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CausticSet {
    pub alpha: Vec<f64>,
    pub degenerate_flags: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Intersection {
    pub count: usize,
    /// line parameters measured from the foot point, ascending
    pub params: Vec<f64>,
    pub points: Vec<Vector>,
    pub discriminant: f64,
}

fn first_sign(v: &Vector) -> f64 {
    for c in v.iter() {
        if c.abs() > 1e-9 {
            return c.signum();
        }
    }
    1.0
}

impl Line {
    pub fn new(point: &Vector, dir: &Vector) -> Result<Line> {
        let n = dir.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::DegenerateLine("zero direction".into()));
        }
        let mut v = dir / n;
        v *= first_sign(&v);
        let p = point - &v * point.dot(&v);
        Ok(Line { p, v })
    }

    pub fn through(a: &Vector, b: &Vector) -> Result<Line> {
        Line::new(a, &(b - a))
    }

    pub fn point_at(&self, t: f64) -> Vector {
        &self.p + &self.v * t
    }

    /// Component-wise distance of canonical forms.
    pub fn distance(&self, other: &Line) -> f64 {
        (&self.p - &other.p).amax().max((&self.v - &other.v).amax())
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        let w = x - &self.p;
        (&w - &self.v * w.dot(&self.v)).norm() <= tol * (1.0 + x.norm())
    }
}

impl DirectedLine {
    pub fn new(point: &Vector, dir: &Vector) -> Result<DirectedLine> {
        let n = dir.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::DegenerateLine("zero direction".into()));
        }
        let v = dir / n;
        let p = point - &v * point.dot(&v);
        Ok(DirectedLine { p, v })
    }

    pub fn line(&self) -> Line {
        let mut v = self.v.clone();
        v *= first_sign(&v);
        Line { p: self.p.clone(), v }
    }

    pub fn reversed(&self) -> DirectedLine {
        DirectedLine { p: self.p.clone(), v: -&self.v }
    }

    pub fn point_at(&self, t: f64) -> Vector {
        &self.p + &self.v * t
    }

    pub fn distance(&self, other: &DirectedLine) -> f64 {
        (&self.p - &other.p).amax().max((&self.v - &other.v).amax())
    }
}

/// Closest points of two lines: (midpoint, gap, parameter on first, parameter on second).
pub fn closest_approach(p1: &Vector, v1: &Vector, p2: &Vector, v2: &Vector) -> (Vector, f64, f64, f64) {
    let w = p2 - p1;
    let a = v1.dot(v1);
    let b = v1.dot(v2);
    let c = v2.dot(v2);
    let det = a * c - b * b;
    let (t, s) = if det.abs() < 1e-300 {
        (w.dot(v1) / a, 0.0)
    } else {
        ((c * w.dot(v1) - b * w.dot(v2)) / det, (b * w.dot(v1) - a * w.dot(v2)) / det)
    };
    let x = p1 + v1 * t;
    let y = p2 + v2 * s;
    ((&x + &y) * 0.5, (x - y).norm(), t, s)
}

impl ConfocalFamily {
    pub fn new(a: Vec<f64>) -> Result<Self> {
        if a.len() < 2 {
            return Err(Error::InvalidFamily("dimension must be at least 2".into()));
        }
        if a.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidFamily("non-finite parameter".into()));
        }
        if a.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidFamily(
                "parameters must be strictly increasing".into(),
            ));
        }
        Ok(ConfocalFamily { a, tol: Tolerances::default() })
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn scale(&self, x: Option<&Vector>) -> f64 {
        let s = self.a.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        match x {
            Some(x) => s.max(x.norm_squared()),
            None => s,
        }
    }

    fn check_dim(&self, x: &Vector) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(())
    }

    fn check_lambda(&self, lam: f64) -> Result<()> {
        if self.a.iter().any(|ai| (ai - lam).abs() < self.tol.degenerate) {
            return Err(Error::DegenerateQuadric(lam));
        }
        Ok(())
    }

    /// `Q_lam(x) - 1` without validation.
    pub fn value(&self, lam: f64, x: &Vector) -> f64 {
        self.a.iter().zip(x.iter()).map(|(ai, xi)| xi * xi / (ai - lam)).sum::<f64>() - 1.0
    }

    pub fn quadric_eval_grad(&self, lam: f64, x: &Vector) -> Result<(f64, Vector)> {
        self.check_dim(x)?;
        self.check_lambda(lam)?;
        let grad = Vector::from_iterator(
            self.dim(),
            self.a.iter().zip(x.iter()).map(|(ai, xi)| 2.0 * xi / (ai - lam)),
        );
        Ok((self.value(lam, x), grad))
    }

    pub fn on_quadric(&self, lam: f64, x: &Vector) -> bool {
        self.value(lam, x).abs() <= self.tol.on_quadric
    }

    pub fn unit_normal(&self, lam: f64, x: &Vector) -> Result<Vector> {
        let (_, g) = self.quadric_eval_grad(lam, x)?;
        let n = g.norm();
        if n < 1e-300 || !n.is_finite() {
            return Err(Error::ZeroGradient);
        }
        Ok(g / n)
    }

    pub fn tangent_hyperplane(&self, lam: f64, x: &Vector) -> Result<Hyperplane> {
        let (val, _) = self.quadric_eval_grad(lam, x)?;
        if val.abs() >= self.tol.on_quadric {
            return Err(Error::NotOnQuadric(val));
        }
        let n = self.unit_normal(lam, x)?;
        let mut u = vec![-n.dot(x)];
        u.extend(n.iter());
        Ok(Hyperplane { u })
    }

    pub fn pole_of_hyperplane(&self, lam: f64, h: &Hyperplane) -> Result<Vector> {
        self.check_lambda(lam)?;
        if h.u.len() != self.dim() + 1 {
            return Err(Error::DimensionMismatch { expected: self.dim() + 1, got: h.u.len() });
        }
        let u0 = h.u[0];
        if u0.abs() < 1e-12 {
            return Err(Error::PoleAtInfinity);
        }
        Ok(Vector::from_iterator(
            self.dim(),
            self.a.iter().zip(&h.u[1..]).map(|(ai, ui)| -(ai - lam) * ui / u0),
        ))
    }

    /// Roots of `1 - sum x_i^2 / (a_i - lambda)`, which decreases strictly between
    /// consecutive poles; components that vanish contribute the root `a_i` itself.
    pub fn elliptic_coordinates(&self, x: &Vector) -> Result<EllipticCoords> {
        self.check_dim(x)?;
        let d = self.dim();
        let floor = 1e-30 * self.scale(Some(x));
        let active: Vec<usize> = (0..d).filter(|&i| x[i] * x[i] > floor).collect();
        let g = |l: f64| 1.0 - active.iter().map(|&i| x[i] * x[i] / (self.a[i] - l)).sum::<f64>();
        let mut lambda: Vec<f64> = (0..d).filter(|i| !active.contains(i)).map(|i| self.a[i]).collect();
        for (k, &i) in active.iter().enumerate() {
            let hi = self.a[i];
            let mut lo = if k == 0 { self.a[0] - x.norm_squared() - 1.0 } else { self.a[active[k - 1]] };
            let mut hi_b = hi;
            for _ in 0..2000 {
                let mid = 0.5 * (lo + hi_b);
                if mid <= lo || mid >= hi_b {
                    break;
                }
                if g(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi_b = mid;
                }
            }
            lambda.push(0.5 * (lo + hi_b));
        }
        lambda.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let scale = self.scale(None);
        let degenerate = lambda
            .iter()
            .enumerate()
            .filter(|(_, l)| self.a.iter().any(|ai| (*l - ai).abs() < 1e-12 * scale))
            .map(|(i, _)| i)
            .collect();
        Ok(EllipticCoords { lambda, degenerate })
    }

    pub fn point_from_elliptic(&self, lambda: &[f64], signs: &[f64]) -> Result<Vector> {
        let d = self.dim();
        if lambda.len() != d || signs.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: lambda.len().min(signs.len()) });
        }
        let mut x = Vector::zeros(d);
        for i in 0..d {
            let num: f64 = lambda.iter().map(|l| self.a[i] - l).product();
            let den: f64 = (0..d).filter(|&j| j != i).map(|j| self.a[i] - self.a[j]).product();
            let sq = num / den;
            if sq < -1e-12 * self.scale(None) {
                return Err(Error::InvalidCoords(format!("x_{}^2 = {sq:e}", i + 1)));
            }
            x[i] = sq.max(0.0).sqrt() * if signs[i] < 0.0 { -1.0 } else { 1.0 };
        }
        Ok(x)
    }

    /// Quadratic `A t^2 + 2 B t + C` of `Q_lam(p + t v) = 1`.
    fn quadratic(&self, lam: f64, p: &Vector, v: &Vector) -> (f64, f64, f64) {
        let (mut a2, mut b, mut c) = (0.0, 0.0, -1.0);
        for i in 0..self.dim() {
            let di = self.a[i] - lam;
            a2 += v[i] * v[i] / di;
            b += p[i] * v[i] / di;
            c += p[i] * p[i] / di;
        }
        (a2, b, c)
    }

    /// Parameters t with `p + t v` on `Q_lam`, for an arbitrary point and direction.
    pub fn intersect_params(&self, lam: f64, p: &Vector, v: &Vector) -> Result<Intersection> {
        self.check_dim(p)?;
        self.check_lambda(lam)?;
        let (qa, qb, qc) = self.quadratic(lam, p, v);
        let disc = qb * qb - qa * qc;
        let scale = (qb * qb).max((qa * qc).abs()).max(1e-300);
        if qa.abs() < 1e-14 * (qb.abs() + qc.abs()) {
            if qb.abs() < 1e-14 * (1.0 + qc.abs()) {
                if qc.abs() < 1e-14 {
                    return Err(Error::LineOnQuadric);
                }
                return Ok(Intersection { count: 0, params: vec![], points: vec![], discriminant: disc });
            }
            let t = -qc / (2.0 * qb);
            return Ok(Intersection { count: 1, params: vec![t], points: vec![p + v * t], discriminant: disc });
        }
        if disc.abs() < self.tol.tangency * scale {
            let t = -qb / qa;
            return Ok(Intersection { count: 1, params: vec![t], points: vec![p + v * t], discriminant: disc });
        }
        if disc < 0.0 {
            return Ok(Intersection { count: 0, params: vec![], points: vec![], discriminant: disc });
        }
        let s = disc.sqrt();
        // numerically stable pair of roots
        let q = -(qb + qb.signum() * s);
        let (mut t1, mut t2) = if q != 0.0 { (q / qa, qc / q) } else { ((-qb - s) / qa, (-qb + s) / qa) };
        if t1 > t2 {
            std::mem::swap(&mut t1, &mut t2);
        }
        Ok(Intersection {
            count: 2,
            params: vec![t1, t2],
            points: vec![p + v * t1, p + v * t2],
            discriminant: disc,
        })
    }

    pub fn line_quadric_intersect(&self, lam: f64, ell: &Line) -> Result<Intersection> {
        self.intersect_params(lam, &ell.p, &ell.v)
    }

    /// `G(lambda) = Phi_lambda(p, v) prod (a_i - lambda)` as a polynomial.
    pub fn chasles_poly(&self, p: &Vector, v: &Vector) -> Poly {
        let d = self.dim();
        let factor = |skip: &[usize]| {
            let roots: Vec<f64> = (0..d).filter(|k| !skip.contains(k)).map(|k| self.a[k]).collect();
            Poly::from_root_factors(&roots)
        };
        let mut g = Poly::constant(0.0);
        for i in 0..d {
            g = g.add(&factor(&[i]).scale(v[i] * v[i]));
        }
        for i in 0..d {
            for j in (i + 1)..d {
                let m = p[i] * v[j] - p[j] * v[i];
                g = g.add(&factor(&[i, j]).scale(-m * m));
            }
        }
        g
    }

    pub fn caustics_of_line(&self, ell: &Line) -> Result<CausticSet> {
        self.check_dim(&ell.p)?;
        let d = self.dim();
        let g = self.chasles_poly(&ell.p, &ell.v);
        let lead = g.0.get(d - 1).copied().unwrap_or(0.0);
        let gmax = g.0.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if lead.abs() < 1e-12 * gmax.max(1.0) {
            return Err(Error::DegenerateLine("caustic polynomial loses degree".into()));
        }
        let g = Poly(g.0[..d].to_vec());
        let mut alpha = g.real_roots(1e-6);
        if alpha.len() != d - 1 {
            return Err(Error::DegenerateLine(format!(
                "expected {} real caustics, found {}",
                d - 1,
                alpha.len()
            )));
        }
        alpha.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let scale = self.scale(None);
        let degenerate_flags = alpha
            .iter()
            .map(|al| self.a.iter().any(|ai| (al - ai).abs() < 1e-8 * scale))
            .collect();
        Ok(CausticSet { alpha, degenerate_flags })
    }

    /// Unit direction at `x` tangent to the caustics `alpha`, with per-coordinate signs.
    /// Components along the normals of the coordinate quadrics follow
    /// `(n_s . y)^2 = prod (alpha_j - lambda_s) / prod_{k != s} (lambda_k - lambda_s)`.
    pub fn direction_from_caustics(&self, x: &Vector, alpha: &[f64], signs: &[f64]) -> Result<Vector> {
        let d = self.dim();
        if alpha.len() != d - 1 || signs.len() != d {
            return Err(Error::DimensionMismatch { expected: d - 1, got: alpha.len() });
        }
        let lam = self.elliptic_coordinates(x)?.lambda;
        let mut y = Vector::zeros(d);
        for s in 0..d {
            let num: f64 = alpha.iter().map(|al| al - lam[s]).product();
            let den: f64 = (0..d).filter(|&k| k != s).map(|k| lam[k] - lam[s]).product();
            let c2 = num / den;
            if c2 < -1e-9 {
                return Err(Error::CausticMismatch(format!(
                    "no real direction at this point (component {s}: {c2:e})"
                )));
            }
            if c2 <= 0.0 {
                continue;
            }
            let n = match self.a.iter().position(|ai| (ai - lam[s]).abs() < 1e-12 * self.scale(None)) {
                Some(i) => {
                    let mut e = Vector::zeros(d);
                    e[i] = 1.0;
                    e
                }
                None => self.unit_normal(lam[s], x)?,
            };
            y += n * (c2.sqrt() * signs[s].signum());
        }
        let n = y.norm();
        if n < 1e-12 {
            return Err(Error::DegenerateLine("zero direction".into()));
        }
        Ok(y / n)
    }
}

impl CausticSet {
    pub fn new(mut alpha: Vec<f64>, family: &ConfocalFamily) -> Self {
        alpha.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let scale = family.scale(None);
        let degenerate_flags = alpha
            .iter()
            .map(|al| family.a().iter().any(|ai| (al - ai).abs() < 1e-8 * scale))
            .collect();
        CausticSet { alpha, degenerate_flags }
    }

    /// Merged ordering `b_1 < ... < b_{2d-1}` with `alpha_j` in `{b_{2j-1}, b_{2j}}`.
    pub fn ordering_holds(&self, family: &ConfocalFamily) -> bool {
        let mut merged: Vec<(f64, Option<usize>)> = family.a().iter().map(|&a| (a, None)).collect();
        merged.extend(self.alpha.iter().enumerate().map(|(j, &al)| (al, Some(j))));
        merged.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        merged.iter().enumerate().all(|(pos, (_, tag))| match tag {
            Some(j) => pos == 2 * j || pos == 2 * j + 1,
            None => true,
        })
    }

    pub fn max_relative_difference(&self, other: &CausticSet, scale: f64) -> f64 {
        self.alpha
            .iter()
            .zip(&other.alpha)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs() / scale))
    }
}
