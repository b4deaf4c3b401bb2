//! Dense real polynomials stored low-to-high, plus scalar root finders.

use nalgebra::DMatrix;

/// Coefficients `c[0] + c[1] x + c[2] x^2 + ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn constant(c: f64) -> Self {
        Poly(vec![c])
    }

    /// The linear factor `(r - x)`.
    pub fn root_factor(r: f64) -> Self {
        Poly(vec![r, -1.0])
    }

    /// `prod_k (r_k - x)`.
    pub fn from_root_factors(roots: &[f64]) -> Self {
        roots
            .iter()
            .fold(Poly::constant(1.0), |acc, &r| acc.mul(&Poly::root_factor(r)))
    }

    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.0.len().max(other.0.len());
        let mut out = vec![0.0; n];
        for (i, c) in self.0.iter().enumerate() {
            out[i] += c;
        }
        for (i, c) in other.0.iter().enumerate() {
            out[i] += c;
        }
        Poly(out)
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly(self.0.iter().map(|c| c * s).collect())
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn derivative(&self) -> Poly {
        if self.0.len() <= 1 {
            return Poly(vec![0.0]);
        }
        Poly(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| k as f64 * c)
                .collect(),
        )
    }

    /// Coefficients of `p(x0 + t)` in powers of `t` (repeated synthetic division).
    pub fn taylor_shift(&self, x0: f64) -> Poly {
        let mut c = self.0.clone();
        let n = c.len();
        for k in 0..n {
            for j in (k..n - 1).rev() {
                c[j] += x0 * c[j + 1];
            }
        }
        Poly(c)
    }

    /// Drop trailing coefficients below `tol` times the largest one.
    pub fn trimmed(&self, tol: f64) -> Poly {
        let m = self.0.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let mut c = self.0.clone();
        while c.len() > 1 && c.last().unwrap().abs() <= tol * m {
            c.pop();
        }
        Poly(c)
    }

    /// Real roots from companion-matrix eigenvalues, Newton-polished and sorted.
    /// Eigenvalues with imaginary part below `imag_tol` (relative) count as real.
    pub fn real_roots(&self, imag_tol: f64) -> Vec<f64> {
        let p = self.trimmed(1e-14);
        let n = p.degree();
        if n == 0 {
            return vec![];
        }
        let lead = p.0[n];
        let mut m = DMatrix::<f64>::zeros(n, n);
        for i in 1..n {
            m[(i, i - 1)] = 1.0;
        }
        for i in 0..n {
            m[(i, n - 1)] = -p.0[i] / lead;
        }
        let dp = p.derivative();
        let mut roots: Vec<f64> = m
            .complex_eigenvalues()
            .iter()
            .filter(|z| z.im.abs() <= imag_tol * (1.0 + z.re.abs()))
            .map(|z| newton_polish(&p, &dp, z.re))
            .collect();
        roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        roots
    }
}

fn newton_polish(p: &Poly, dp: &Poly, mut x: f64) -> f64 {
    for _ in 0..8 {
        let d = dp.eval(x);
        if d == 0.0 {
            break;
        }
        let step = p.eval(x) / d;
        let next = x - step;
        if !next.is_finite() || p.eval(next).abs() > p.eval(x).abs() {
            break;
        }
        x = next;
        if step.abs() <= 1e-16 * (1.0 + x.abs()) {
            break;
        }
    }
    x
}

/// Bisection on a bracket with `f(lo)` and `f(hi)` of opposite sign (or zero).
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, xtol: f64) -> Option<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if !(flo.is_finite() && fhi.is_finite()) || flo.signum() == fhi.signum() {
        return None;
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= xtol || mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}
