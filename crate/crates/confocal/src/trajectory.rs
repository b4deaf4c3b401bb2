//! Billiard trajectories inside a quadric or along a sequence of confocal mirrors.

use std::fmt::Write as _;

use serde::Serialize;

use crate::confocal_core::{CausticSet, ConfocalFamily, DirectedLine, Line, Vector};
use crate::error::{Error, Result};
use crate::reflection::{reflect, Mode};

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub family: ConfocalFamily,
    /// mirror parameter of each reflection
    pub bounce_params: Vec<f64>,
    pub modes: Vec<Mode>,
    /// `points[0]` is the start, `points[k]` the k-th reflection point
    pub points: Vec<Vector>,
    /// outgoing unit direction at each point
    pub directions: Vec<Vector>,
    pub segments: Vec<Line>,
    pub caustics: CausticSet,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.bounce_params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bounce_params.is_empty()
    }

    pub fn directed(&self, k: usize) -> DirectedLine {
        DirectedLine::new(&self.points[k], &self.directions[k]).expect("unit direction")
    }

    /// Largest relative deviation of per-segment caustics from the stored set.
    pub fn caustic_drift(&self) -> Result<f64> {
        let scale = self.family.scale(None);
        let mut drift = 0.0f64;
        for s in &self.segments {
            let c = self.family.caustics_of_line(s)?;
            drift = drift.max(c.max_relative_difference(&self.caustics, scale));
        }
        Ok(drift)
    }
}

fn forward_param(f: &ConfocalFamily, lam: f64, from: &Vector, dir: &Vector) -> Result<f64> {
    let i = f.intersect_params(lam, from, dir)?;
    let eps = 1e-10 * f.scale(Some(from)).sqrt();
    i.params
        .iter()
        .copied()
        .filter(|t| *t > eps)
        .fold(None, |m: Option<f64>, t| Some(m.map_or(t, |m| m.min(t))))
        .ok_or(Error::NoForwardIntersection)
}

/// Advance from `from` along `dir` to the next intersection with `Q_lam` and reflect.
pub fn step(f: &ConfocalFamily, lam: f64, from: &Vector, dir: &Vector, mode: Mode) -> Result<(Vector, Vector)> {
    let d = dir / dir.norm();
    let t = forward_param(f, lam, from, &d)?;
    let x = from + &d * t;
    let out = reflect(f, lam, &x, &d, mode)?;
    Ok((x, out))
}

pub fn simulate(f: &ConfocalFamily, lam_boundary: f64, start: &Vector, dir: &Vector, n: usize) -> Result<Trajectory> {
    if f.value(lam_boundary, start) > f.tol.on_quadric {
        return Err(Error::StartOutside);
    }
    simulate_sequence(f, &vec![lam_boundary; n], &vec![Mode::Real; n], start, dir)
}

pub fn simulate_sequence(
    f: &ConfocalFamily,
    lams: &[f64],
    modes: &[Mode],
    start: &Vector,
    dir: &Vector,
) -> Result<Trajectory> {
    if lams.len() != modes.len() {
        return Err(Error::Validation("one mode per mirror is required".into()));
    }
    let d0 = dir / dir.norm();
    let first = Line::new(start, &d0)?;
    let caustics = f.caustics_of_line(&first)?;
    let mut points = vec![start.clone()];
    let mut directions = vec![d0.clone()];
    let mut segments = vec![first];
    let (mut x, mut d) = (start.clone(), d0);
    for (&lam, &mode) in lams.iter().zip(modes) {
        let (nx, nd) = step(f, lam, &x, &d, mode)?;
        segments.push(Line::new(&nx, &nd)?);
        points.push(nx.clone());
        directions.push(nd.clone());
        x = nx;
        d = nd;
    }
    Ok(Trajectory {
        family: f.clone(),
        bounce_params: lams.to_vec(),
        modes: modes.to_vec(),
        points,
        directions,
        segments,
        caustics,
    })
}

/// Smallest n such that the oriented segment n coincides with the initial one.
pub fn detect_closure(t: &Trajectory, tol: f64) -> Option<usize> {
    let s = t.family.scale(None).sqrt();
    let first = t.directed(0);
    (1..t.points.len()).find(|&k| t.directed(k).distance(&first) <= tol * s)
}

/// Distance between the oriented segment `n` and the initial one.
pub fn closure_gap(t: &Trajectory, n: usize) -> f64 {
    t.directed(n).distance(&t.directed(0))
}

/// Replay from the last reflection point against the last incoming direction
/// through the earlier mirrors in reverse order and return the distance to the
/// reversed initial segment.
pub fn time_reversal_gap(t: &Trajectory) -> Result<f64> {
    let n = t.len();
    if n == 0 {
        return Ok(0.0);
    }
    let lams: Vec<f64> = t.bounce_params[..n - 1].iter().rev().copied().collect();
    let modes: Vec<Mode> = t.modes[..n - 1].iter().rev().copied().collect();
    let back = simulate_sequence(&t.family, &lams, &modes, &t.points[n], &(-&t.directions[n - 1]))?;
    let end = DirectedLine::new(&back.points[n - 1], &back.directions[n - 1])?;
    Ok(end.distance(&t.directed(0).reversed()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ConicType {
    Ellipse,
    Hyperbola,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindingReport {
    pub caustic_type: ConicType,
    /// ellipse: sign of the angular momentum about the centre;
    /// hyperbola: sign of the crossing of the long axis
    pub signs: Vec<i8>,
    pub same_winding: bool,
    pub alternating: bool,
}

pub fn caustic_type_2d(f: &ConfocalFamily, alpha: f64) -> Result<ConicType> {
    let a = f.a();
    let eps = 1e-12 * f.scale(None);
    if alpha < a[0] - eps {
        Ok(ConicType::Ellipse)
    } else if alpha > a[0] + eps && alpha < a[1] - eps {
        Ok(ConicType::Hyperbola)
    } else {
        Err(Error::DegenerateCaustic)
    }
}

pub fn classify_winding_2d(t: &Trajectory) -> Result<WindingReport> {
    if t.family.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: t.family.dim() });
    }
    let caustic_type = caustic_type_2d(&t.family, t.caustics.alpha[0])?;
    let signs: Vec<i8> = (0..t.points.len())
        .map(|k| {
            let (p, v) = (&t.points[k], &t.directions[k]);
            let s = match caustic_type {
                ConicType::Ellipse => p[0] * v[1] - p[1] * v[0],
                ConicType::Hyperbola => v[0],
            };
            if s > 0.0 {
                1
            } else if s < 0.0 {
                -1
            } else {
                0
            }
        })
        .collect();
    let same_winding = signs.iter().all(|s| *s == signs[0] && *s != 0);
    let alternating = signs.windows(2).all(|w| w[0] == -w[1] && w[0] != 0);
    Ok(WindingReport { caustic_type, signs, same_winding, alternating })
}

pub const TRAJECTORY_FORMAT: &str = "confocal-trajectory v1";

/// Text record: a header line, `d`, `a`, `count`, then one line per vertex
/// `lambda x_1 .. x_d v_1 .. v_d` (lambda is `start` for the initial point,
/// the mode `r` or `v` follows lambda).
pub fn write_trajectory(t: &Trajectory) -> String {
    let mut s = String::new();
    let d = t.family.dim();
    let _ = writeln!(s, "{TRAJECTORY_FORMAT}");
    let _ = writeln!(s, "d {d}");
    let _ = writeln!(s, "a {}", t.family.a().iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" "));
    let _ = writeln!(s, "count {}", t.points.len());
    for k in 0..t.points.len() {
        let head = if k == 0 {
            "start -".to_string()
        } else {
            let m = if t.modes[k - 1] == Mode::Real { "r" } else { "v" };
            format!("{:?} {m}", t.bounce_params[k - 1])
        };
        let nums: Vec<String> = t.points[k].iter().chain(t.directions[k].iter()).map(|x| format!("{x:?}")).collect();
        let _ = writeln!(s, "{head} {}", nums.join(" "));
    }
    s
}

pub fn read_trajectory(text: &str) -> Result<Trajectory> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let perr = |n: usize, m: &str| Error::Parse(format!("line {}: {m}", n + 1));
    let (n0, head) = lines.next().ok_or_else(|| Error::Parse("empty input".into()))?;
    if head.trim() != TRAJECTORY_FORMAT {
        return Err(perr(n0, "unsupported header"));
    }
    let mut field = |key: &str| -> Result<(usize, Vec<String>)> {
        let (n, l) = lines.next().ok_or_else(|| Error::Parse(format!("missing '{key}'")))?;
        let mut parts = l.split_whitespace();
        if parts.next() != Some(key) {
            return Err(perr(n, &format!("expected '{key}'")));
        }
        Ok((n, parts.map(String::from).collect()))
    };
    let num = |n: usize, s: &str| s.parse::<f64>().map_err(|_| perr(n, &format!("bad number '{s}'")));
    let (nd, d) = field("d")?;
    let d: usize = d.first().and_then(|s| s.parse().ok()).ok_or_else(|| perr(nd, "bad dimension"))?;
    let (na, a) = field("a")?;
    let a = a.iter().map(|s| num(na, s)).collect::<Result<Vec<_>>>()?;
    if a.len() != d {
        return Err(perr(na, "parameter count differs from d"));
    }
    let (nc, c) = field("count")?;
    let count: usize = c.first().and_then(|s| s.parse().ok()).ok_or_else(|| perr(nc, "bad count"))?;
    let family = ConfocalFamily::new(a)?;
    let (mut bounce_params, mut modes, mut points, mut directions) = (vec![], vec![], vec![], vec![]);
    for k in 0..count {
        let (n, l) = lines.next().ok_or_else(|| Error::Parse(format!("missing vertex {k}")))?;
        let parts: Vec<&str> = l.split_whitespace().collect();
        if parts.len() != 2 + 2 * d {
            return Err(perr(n, "wrong field count"));
        }
        if k == 0 {
            if parts[0] != "start" {
                return Err(perr(n, "first vertex must be 'start'"));
            }
        } else {
            bounce_params.push(num(n, parts[0])?);
            modes.push(match parts[1] {
                "r" => Mode::Real,
                "v" => Mode::Virtual,
                _ => return Err(perr(n, "mode must be r or v")),
            });
        }
        let vals = parts[2..].iter().map(|s| num(n, s)).collect::<Result<Vec<_>>>()?;
        points.push(Vector::from_column_slice(&vals[..d]));
        directions.push(Vector::from_column_slice(&vals[d..]));
    }
    let segments = points
        .iter()
        .zip(&directions)
        .map(|(p, v)| Line::new(p, v))
        .collect::<Result<Vec<_>>>()?;
    let caustics = family.caustics_of_line(&segments[0])?;
    Ok(Trajectory { family, bounce_params, modes, points, directions, segments, caustics })
}
