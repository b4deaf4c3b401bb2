//! Billiard algebra on lines tangent to two fixed confocal quadrics in space.
//!
//! Elements carry their oriented line together with a divisor: the list of
//! lines through the neutral line `O` (one tag per reflection of `O`) whose
//! sum the element represents. The divisor certifies decompositions and
//! provides the fallback construction through the billiard map.

use serde::Serialize;

use crate::confocal_core::{closest_approach, CausticSet, ConfocalFamily, DirectedLine, Hyperplane, Line, Vector};
use crate::error::{Error, Result};
use crate::reflection::{build_drc_at, mirror, pencil_check, PencilReport};

/// Reflection of `O` at the `idx`-th intersection (ascending along `O`) with `Q_lam`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tag {
    pub lam: f64,
    pub idx: usize,
}

impl Tag {
    pub fn tau(&self) -> Tag {
        Tag { lam: self.lam, idx: 1 - self.idx }
    }

    pub fn same(&self, other: &Tag) -> bool {
        self.idx == other.idx && (self.lam - other.lam).abs() <= 1e-10 * (1.0 + self.lam.abs())
    }

    pub fn is_tau_of(&self, other: &Tag) -> bool {
        self.same(&other.tau())
    }
}

/// How the line of an element was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Path {
    /// reflections and double reflection configurations only
    Construction,
    /// a decomposition found by `lines_meeting` and certified by the divisor
    Decomposition,
    /// no certified real decomposition; the line comes from the billiard map
    BilliardMap,
}

#[derive(Debug, Clone)]
pub struct Element {
    pub line: DirectedLine,
    pub divisor: Vec<Tag>,
    pub path: Path,
}

#[derive(Debug, Clone)]
pub struct AlgebraContext {
    pub family: ConfocalFamily,
    pub caustics: CausticSet,
    pub o: DirectedLine,
    pub q_o: f64,
    pub pi: Hyperplane,
    /// distance from the tangency point of `pi` with `Q_O` to `O`
    pub pi_residual: f64,
    /// |mirror(v) + v| at the best intersection of `O` with `Q_O` (0 means `O` reflects to itself)
    pub self_reflection_residual: f64,
    /// `O` is orthogonal to a coordinate hyperplane and `Q_O` is that hyperplane
    pub degenerate_neutral: bool,
}

/// A line meeting both `O` and a target line.
#[derive(Debug, Clone)]
pub struct Meeting {
    pub tag: Tag,
    pub line: DirectedLine,
    pub gap: f64,
}

/// Lines of a billiard trajectory from `O` produced by the billiard map.
#[derive(Debug, Clone)]
pub struct BilliardChain {
    pub lines: Vec<DirectedLine>,
    pub points: Vec<Vector>,
    pub params: Vec<f64>,
}

fn sort_pair(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl AlgebraContext {
    pub fn new(f: &ConfocalFamily, alpha1: f64, alpha2: f64, o: &DirectedLine) -> Result<Self> {
        if f.dim() != 3 {
            return Err(Error::DimensionMismatch { expected: 3, got: f.dim() });
        }
        let (alpha1, alpha2) = sort_pair(alpha1, alpha2);
        let c = f.caustics_of_line(&o.line())?;
        let scale = f.scale(None);
        if (c.alpha[0] - alpha1).abs() > 1e-8 * scale || (c.alpha[1] - alpha2).abs() > 1e-8 * scale {
            return Err(Error::CausticMismatch(format!(
                "line caustics {:?} differ from ({alpha1}, {alpha2})",
                c.alpha
            )));
        }
        let caustics = CausticSet::new(vec![alpha1, alpha2], f);
        let v = &o.v;
        let a = f.a();
        if let Some(k) = (0..3).find(|&k| v[k].abs() > 1.0 - 1e-12) {
            let mut u = vec![0.0; 4];
            u[k + 1] = 1.0;
            return Ok(AlgebraContext {
                family: f.clone(),
                caustics,
                o: o.clone(),
                q_o: a[k],
                pi: Hyperplane { u },
                pi_residual: o.p[k].abs(),
                self_reflection_residual: 0.0,
                degenerate_neutral: true,
            });
        }
        // planes v.y = c orthogonal to O touch Q_mu with mu = sum a_i v_i^2 - c^2 at
        // y_i = (a_i - mu) v_i / c; pick c so that the touching point is closest to O
        let av: f64 = (0..3).map(|i| a[i] * v[i] * v[i]).sum();
        let touch = |c: f64| -> (f64, Vector) {
            let mu = av - c * c;
            (mu, Vector::from_iterator(3, (0..3).map(|i| (a[i] - mu) * v[i] / c)))
        };
        let dist = |c: f64| -> f64 {
            let (_, y) = touch(c);
            let w = &y - &o.p;
            (&w - v * w.dot(v)).norm()
        };
        let r = 4.0 * scale.sqrt();
        let grid: Vec<f64> = (1..=4000).flat_map(|k| {
            let c = r * k as f64 / 4000.0;
            [c, -c]
        }).collect();
        let mut best = grid[0];
        for &c in &grid {
            if dist(c) < dist(best) {
                best = c;
            }
        }
        let (mut lo, mut hi) = (best - r / 4000.0, best + r / 4000.0);
        for _ in 0..200 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            if dist(m1) < dist(m2) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        let c = 0.5 * (lo + hi);
        let (q_o, _) = touch(c);
        let mut u = vec![-c];
        u.extend(v.iter());
        let self_reflection_residual = match f.intersect_params(q_o, &o.p, v) {
            Ok(i) if i.count > 0 => i
                .points
                .iter()
                .filter_map(|x| f.unit_normal(q_o, x).ok())
                .map(|n| (mirror(v, &n) + v).norm())
                .fold(f64::INFINITY, f64::min),
            _ => f64::INFINITY,
        };
        Ok(AlgebraContext {
            family: f.clone(),
            caustics,
            o: o.clone(),
            q_o,
            pi: Hyperplane { u },
            pi_residual: dist(c),
            self_reflection_residual,
            degenerate_neutral: false,
        })
    }

    fn f(&self) -> &ConfocalFamily {
        &self.family
    }

    /// Point of `O` on `Q_lam` selected by the tag.
    pub fn co_point(&self, t: Tag) -> Result<Vector> {
        let i = self.f().intersect_params(t.lam, &self.o.p, &self.o.v)?;
        if i.count < 2 {
            return Err(Error::DegenerateConfiguration("O does not cross the quadric twice".into()));
        }
        Ok(i.points[t.idx].clone())
    }

    /// Reflection of `O` at the tagged point.
    pub fn co_line(&self, t: Tag) -> Result<DirectedLine> {
        let x = self.co_point(t)?;
        let n = self.f().unit_normal(t.lam, &x)?;
        DirectedLine::new(&x, &mirror(&self.o.v, &n))
    }

    /// Tag of the intersection of `O` with `Q_lam` nearest to `x`.
    pub fn tag_at(&self, lam: f64, x: &Vector) -> Result<Tag> {
        let i = self.f().intersect_params(lam, &self.o.p, &self.o.v)?;
        if i.count < 2 {
            return Err(Error::DegenerateConfiguration("O does not cross the quadric twice".into()));
        }
        let idx = if (&i.points[0] - x).norm() <= (&i.points[1] - x).norm() { 0 } else { 1 };
        Ok(Tag { lam, idx })
    }

    /// Tag for the point of `O` at parameter `t` on the `branch`-th confocal quadric through it.
    pub fn tag_on_o(&self, t: f64, branch: usize) -> Result<Tag> {
        let x = self.o.point_at(t);
        let lam = self.f().elliptic_coordinates(&x)?.lambda[branch];
        self.tag_at(lam, &x)
    }

    pub fn neutral(&self) -> Element {
        Element { line: self.o.clone(), divisor: vec![], path: Path::Construction }
    }

    pub fn element(&self, t: Tag) -> Result<Element> {
        Ok(Element { line: self.co_line(t)?, divisor: vec![t], path: Path::Construction })
    }

    /// Fourth line of the configuration seeded by `seed` with reflections at
    /// `pa` on `Q_la` and `pb` on `Q_lb`, oriented through real reflections.
    fn drc4(&self, seed: &DirectedLine, la: f64, pa: &Vector, lb: f64, pb: &Vector) -> Result<(DirectedLine, Vector)> {
        let q = build_drc_at(self.f(), la, pa, lb, pb, &seed.v)?;
        Ok((q.directed[3].clone(), q.points[2].clone()))
    }

    /// `s1 + s2` for lines through `O`: the fourth line of the configuration
    /// with `O`, `-s1`, `-s2`.
    pub fn add_co(&self, t1: Tag, t2: Tag) -> Result<DirectedLine> {
        if t1.is_tau_of(&t2) {
            return Ok(self.o.clone());
        }
        if t1.same(&t2) {
            // s + s: reflect -s again on Q_s at its other intersection
            let a = self.co_point(t1.tau())?;
            let m = self.co_line(t1.tau())?;
            let i = self.f().intersect_params(t1.lam, &m.p, &m.v)?;
            if i.count < 2 {
                return Err(Error::DegenerateConfiguration("doubling secant is tangent".into()));
            }
            let b = if (&i.points[0] - &a).norm() >= (&i.points[1] - &a).norm() { &i.points[0] } else { &i.points[1] };
            let n = self.f().unit_normal(t1.lam, b)?;
            return DirectedLine::new(b, &mirror(&m.v, &n));
        }
        let x1 = self.co_point(t1.tau())?;
        let y1 = self.co_point(t2.tau())?;
        Ok(self.drc4(&self.o, t1.lam, &x1, t2.lam, &y1)?.0)
    }

    /// Point of the line `l` on `Q_lam` nearest to `x`.
    fn snap(&self, lam: f64, l: &DirectedLine, x: &Vector) -> Result<Vector> {
        let i = self.f().intersect_params(lam, &l.p, &l.v)?;
        i.points
            .into_iter()
            .min_by(|a, b| (a - x).norm().partial_cmp(&(b - x).norm()).unwrap())
            .ok_or(Error::NoRealIntersection)
    }

    /// `s + (p + q)` for three lines through `O`.
    pub fn partial(&self, s: Tag, p: Tag, q: Tag) -> Result<DirectedLine> {
        if s.is_tau_of(&p) {
            return self.co_line(q);
        }
        if s.is_tau_of(&q) {
            return self.co_line(p);
        }
        if p.is_tau_of(&q) {
            return self.co_line(s);
        }
        let p1 = self.add_co(s.tau(), p.tau())?;
        let q1 = self.add_co(s.tau(), q.tau())?;
        let sl = self.co_line(s)?;
        let (m1, _, _, _) = closest_approach(&sl.p, &sl.v, &p1.p, &p1.v);
        let (m2, _, _, _) = closest_approach(&sl.p, &sl.v, &q1.p, &q1.v);
        let x1 = self.snap(p.lam, &sl, &m1)?;
        let y1 = self.snap(q.lam, &sl, &m2)?;
        Ok(self.drc4(&sl, p.lam, &x1, q.lam, &y1)?.0)
    }

    /// The billiard map: trajectory from `O` whose reflections are pushed out of
    /// the given lines through `O`, in order.
    pub fn billiard_b(&self, tags: &[Tag]) -> Result<BilliardChain> {
        let mut lines = vec![self.o.clone()];
        let mut points = vec![];
        let mut params = vec![];
        let mut pending: Vec<(f64, Vector, DirectedLine)> = tags
            .iter()
            .map(|t| Ok((t.lam, self.co_point(*t)?, self.co_line(*t)?)))
            .collect::<Result<_>>()?;
        while !pending.is_empty() {
            let (lam, p, l) = pending.remove(0);
            let prev = lines.last().unwrap().clone();
            let mut next = Vec::with_capacity(pending.len());
            for (lk, pk, _) in &pending {
                let (fourth, meet) = self.drc4(&prev, lam, &p, *lk, pk)?;
                next.push((*lk, meet, fourth));
            }
            lines.push(l);
            points.push(p);
            params.push(lam);
            pending = next;
        }
        Ok(BilliardChain { lines, points, params })
    }

    /// Line represented by a divisor: the final segment of the billiard map,
    /// applied to the divisor for odd length and to its negation for even length.
    pub fn line_of(&self, tags: &[Tag]) -> Result<DirectedLine> {
        let tags = cancel(tags);
        if tags.is_empty() {
            return Ok(self.o.clone());
        }
        let input: Vec<Tag> = if tags.len() % 2 == 1 { tags } else { tags.iter().map(|t| t.tau()).collect() };
        Ok(self.billiard_b(&input)?.lines.last().unwrap().clone())
    }

    /// Lines through `O` obtained by pulling each reflection of a trajectory
    /// starting on `O` back to `O`.
    pub fn divisor_d(&self, lines: &[DirectedLine], points: &[Vector], params: &[f64]) -> Result<Vec<Tag>> {
        let n = params.len();
        if lines.len() != n + 1 || points.len() != n {
            return Err(Error::Validation("trajectory needs n + 1 lines and n points".into()));
        }
        if lines[0].distance(&self.o) > 1e-8 {
            return Err(Error::Validation("trajectory must start on O".into()));
        }
        let mut out = Vec::with_capacity(n);
        for k in 1..=n {
            let lk = params[k - 1];
            let mut meet = points[k - 1].clone();
            for j in (1..k).rev() {
                let (_, m) = self.drc4(&lines[j], params[j - 1], &points[j - 1], lk, &meet)?;
                meet = m;
            }
            out.push(self.tag_at(lk, &meet)?);
        }
        Ok(out)
    }

    /// Lines tangent to both caustics meeting `O` and `x`, found by scanning the
    /// reflections of `O` at the confocal quadrics through points of `O`.
    pub fn lines_meeting(&self, x: &DirectedLine) -> Result<Vec<Meeting>> {
        if x.line().distance(&self.o.line()) < 1e-9 {
            return Err(Error::Validation("target coincides with O".into()));
        }
        let f = self.f();
        let s = f.a()[2].abs().sqrt().max(1.0);
        let cand = |th: f64, br: usize| -> Option<(Vector, f64, Vector)> {
            let t = s * th.tan();
            let p = self.o.point_at(t);
            let lam = f.elliptic_coordinates(&p).ok()?.lambda[br];
            let n = f.unit_normal(lam, &p).ok()?;
            Some((p, lam, mirror(&self.o.v, &n)))
        };
        let triple = |th: f64, br: usize| -> f64 {
            match cand(th, br) {
                Some((p, _, vc)) => {
                    let c = vc.cross(&x.v);
                    (&p - &x.p).dot(&c)
                }
                None => f64::NAN,
            }
        };
        const N: usize = 400;
        let half = std::f64::consts::FRAC_PI_2;
        let ths: Vec<f64> = (1..=N).map(|k| -half + std::f64::consts::PI * k as f64 / (N + 1) as f64).collect();
        let mut out: Vec<Meeting> = vec![];
        for br in 0..3 {
            let vals: Vec<f64> = ths.iter().map(|&t| triple(t, br)).collect();
            for k in 0..N - 1 {
                let (va, vb) = (vals[k], vals[k + 1]);
                if !(va.is_finite() && vb.is_finite()) || va.signum() == vb.signum() {
                    continue;
                }
                let Some(th) = crate::poly::bisect(|t| triple(t, br), ths[k], ths[k + 1], 1e-15) else { continue };
                let Some((p, lam, vc)) = cand(th, br) else { continue };
                let (_, gap, _, _) = closest_approach(&p, &vc, &x.p, &x.v);
                if gap > 1e-7 * s {
                    continue;
                }
                let Ok(tag) = self.tag_at(lam, &p) else { continue };
                if out.iter().any(|m| m.tag.same(&tag)) {
                    continue;
                }
                let Ok(line) = DirectedLine::new(&p, &vc) else { continue };
                out.push(Meeting { tag, line, gap });
            }
        }
        Ok(out)
    }

    /// Tag of a line meeting `O` (orientation must agree with the reflection of `O`).
    pub fn tag_of_line(&self, l: &DirectedLine) -> Result<Option<Tag>> {
        let (m, gap, _, _) = closest_approach(&self.o.p, &self.o.v, &l.p, &l.v);
        if gap > 1e-8 {
            return Ok(None);
        }
        let lams = self.f().elliptic_coordinates(&m)?.lambda;
        for lam in lams {
            let Ok(tag) = self.tag_at(lam, &m) else { continue };
            if let Ok(c) = self.co_line(tag) {
                if c.distance(l) < 1e-7 {
                    return Ok(Some(tag));
                }
            }
        }
        Ok(None)
    }

    /// Two lines `p, q` through `O` with `p + q` equal to the element, certified by
    /// `line_of(divisor + tau p + tau q) = O`.
    pub fn decompose(&self, e: &Element) -> Result<(Tag, Tag)> {
        let div = cancel(&e.divisor);
        if div.len() == 2 {
            return Ok((div[0], div[1]));
        }
        let meetings = self.lines_meeting(&e.line)?;
        for i in 0..meetings.len() {
            for j in (i + 1)..meetings.len() {
                let (u1, u2) = (meetings[i].tag, meetings[j].tag);
                let Ok(sum) = self.add_co(u1.tau(), u2.tau()) else { continue };
                if sum.distance(&e.line) > 1e-6 {
                    continue;
                }
                if div.is_empty() {
                    return Ok((u1.tau(), u2.tau()));
                }
                let mut cert = div.clone();
                cert.push(u1);
                cert.push(u2);
                if let Ok(l) = self.line_of(&cert) {
                    if l.distance(&self.o) < 1e-6 {
                        return Ok((u1.tau(), u2.tau()));
                    }
                }
            }
        }
        Err(Error::SearchFailed(format!(
            "no certified real decomposition among {} meeting lines",
            meetings.len()
        )))
    }

    /// Element for a bare line tangent to the caustics.
    pub fn element_of_line(&self, l: &DirectedLine) -> Result<Element> {
        if l.distance(&self.o) < 1e-9 {
            return Ok(self.neutral());
        }
        if let Some(t) = self.tag_of_line(l)? {
            return Ok(Element { line: l.clone(), divisor: vec![t], path: Path::Construction });
        }
        let e = Element { line: l.clone(), divisor: vec![], path: Path::Decomposition };
        let (p, q) = self.decompose(&e)?;
        Ok(Element { line: l.clone(), divisor: vec![p, q], path: Path::Decomposition })
    }

    fn fallback(&self, divisor: Vec<Tag>) -> Result<Element> {
        Ok(Element { line: self.line_of(&divisor)?, divisor, path: Path::BilliardMap })
    }

    fn worst(a: Path, b: Path) -> Path {
        use Path::*;
        match (a, b) {
            (BilliardMap, _) | (_, BilliardMap) => BilliardMap,
            (Decomposition, _) | (_, Decomposition) => Decomposition,
            _ => Construction,
        }
    }

    pub fn negate(&self, x: &Element) -> Result<Element> {
        let div: Vec<Tag> = cancel(&x.divisor).iter().map(|t| t.tau()).collect();
        match div.len() {
            0 => Ok(self.neutral()),
            1 => Ok(Element { line: self.co_line(div[0])?, divisor: div, path: x.path }),
            2 => Ok(Element { line: self.add_co(div[0], div[1])?, divisor: div, path: x.path }),
            _ => match self.decompose(x) {
                Ok((p, q)) => Ok(Element {
                    line: self.add_co(p.tau(), q.tau())?,
                    divisor: div,
                    path: Self::worst(x.path, Path::Decomposition),
                }),
                Err(_) => self.fallback(div),
            },
        }
    }

    /// `s + y` for a line `s` through `O`.
    fn add_tag(&self, s: Tag, y: &Element) -> Result<Element> {
        let ydiv = cancel(&y.divisor);
        let mut divisor = vec![s];
        divisor.extend(ydiv.iter().copied());
        let divisor = cancel(&divisor);
        match ydiv.len() {
            0 => self.element(s),
            1 => Ok(Element { line: self.add_co(s, ydiv[0])?, divisor, path: y.path }),
            _ => match self.decompose(y) {
                Ok((p, q)) => {
                    let path = if ydiv.len() == 2 { y.path } else { Self::worst(y.path, Path::Decomposition) };
                    Ok(Element { line: self.partial(s, p, q)?, divisor, path })
                }
                Err(_) => self.fallback(divisor),
            },
        }
    }

    /// Sum following the three cases: both through `O`, one through `O`, and
    /// `x + y = s1 + (s2 + y)` for a decomposition `x = s1 + s2`.
    pub fn add(&self, x: &Element, y: &Element) -> Result<Element> {
        let xd = cancel(&x.divisor);
        let yd = cancel(&y.divisor);
        if xd.is_empty() {
            return Ok(y.clone());
        }
        if yd.is_empty() {
            return Ok(x.clone());
        }
        if xd.len() == 1 {
            return self.add_tag(xd[0], y);
        }
        if yd.len() == 1 {
            return self.add_tag(yd[0], x);
        }
        let (s1, s2) = match self.decompose(x) {
            Ok(pq) => pq,
            Err(_) => {
                let mut d = xd.clone();
                d.extend(yd.iter().copied());
                return self.fallback(cancel(&d));
            }
        };
        let inner = self.add_tag(s2, y)?;
        let mut out = self.add_tag(s1, &inner)?;
        let mut d = xd;
        d.extend(yd);
        out.divisor = cancel(&d);
        if out.divisor.is_empty() {
            out.line = self.o.clone();
        }
        let x_path = if cancel(&x.divisor).len() == 2 { x.path } else { Self::worst(x.path, Path::Decomposition) };
        out.path = Self::worst(out.path, x_path);
        Ok(out)
    }

    pub fn sum(&self, xs: &[Element]) -> Result<Element> {
        xs.iter().try_fold(self.neutral(), |acc, x| self.add(&acc, x))
    }
}

/// Remove pairs `t, tau t` from a divisor.
pub fn cancel(tags: &[Tag]) -> Vec<Tag> {
    let mut out: Vec<Tag> = vec![];
    for t in tags {
        if let Some(k) = out.iter().position(|u| u.is_tau_of(t)) {
            out.remove(k);
        } else {
            out.push(*t);
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct Connection {
    pub quadrics: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    /// the final reflection reproduces the orientation of the target line
    pub oriented: bool,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SkewClass {
    pub s: i64,
    /// canonical connection: oriented, lexicographically smallest sorted quadric list
    pub connecting_quadrics: Vec<f64>,
    pub connections: Vec<Connection>,
}

fn oriented_reflection_match(
    f: &ConfocalFamily,
    y_pt: &Vector,
    incoming: &Vector,
    target: &Vector,
) -> Option<(f64, f64, bool)> {
    let lams = f.elliptic_coordinates(y_pt).ok()?.lambda;
    lams.iter()
        .filter_map(|&mu| {
            let n = f.unit_normal(mu, y_pt).ok()?;
            let w = mirror(incoming, &n);
            let r = w.cross(target).norm();
            Some((mu, r, w.dot(target) > 0.0))
        })
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
}

/// Classify the pair `(x, y)` of lines in space: equal, intersecting, or
/// connected through one intermediate reflection.
pub fn s_skew(f: &ConfocalFamily, x: &DirectedLine, y: &DirectedLine) -> Result<SkewClass> {
    if f.dim() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, got: f.dim() });
    }
    let scale = f.scale(None).sqrt();
    if x.line().distance(&y.line()) < 1e-8 {
        return Ok(SkewClass { s: -1, connecting_quadrics: vec![], connections: vec![] });
    }
    let (m, gap, _, _) = closest_approach(&x.p, &x.v, &y.p, &y.v);
    if gap < 1e-8 * scale {
        let (mu, r, oriented) =
            oriented_reflection_match(f, &m, &x.v, &y.v).ok_or_else(|| Error::SearchFailed("no mirror at the meeting point".into()))?;
        let c = Connection { quadrics: vec![mu], points: vec![m.iter().copied().collect()], oriented, residual: r };
        return Ok(SkewClass { s: 0, connecting_quadrics: vec![mu], connections: vec![c] });
    }
    let connections = one_step_connections(f, x, y)?;
    if connections.is_empty() {
        return Err(Error::SearchFailed("no single intermediate reflection found".into()));
    }
    let mut oriented: Vec<Vec<f64>> = connections.iter().filter(|c| c.oriented).map(|c| sorted(&c.quadrics)).collect();
    oriented.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let connecting_quadrics = oriented.first().cloned().unwrap_or_else(|| sorted(&connections[0].quadrics));
    Ok(SkewClass { s: 1, connecting_quadrics, connections })
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut v = v.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

/// Reflections of `x` at confocal quadrics through its points that meet `y`,
/// followed by the reflection at the meeting point that best maps onto `y`.
pub fn one_step_connections(f: &ConfocalFamily, x: &DirectedLine, y: &DirectedLine) -> Result<Vec<Connection>> {
    let s = f.a()[2].abs().sqrt().max(1.0);
    let cand = |th: f64, br: usize| -> Option<(Vector, f64, Vector)> {
        let p = x.point_at(s * th.tan());
        let lam = f.elliptic_coordinates(&p).ok()?.lambda[br];
        let n = f.unit_normal(lam, &p).ok()?;
        Some((p, lam, mirror(&x.v, &n)))
    };
    let triple = |th: f64, br: usize| -> f64 {
        match cand(th, br) {
            Some((p, _, vc)) => (&p - &y.p).dot(&vc.cross(&y.v)),
            None => f64::NAN,
        }
    };
    const N: usize = 600;
    let half = std::f64::consts::FRAC_PI_2;
    let ths: Vec<f64> = (1..=N).map(|k| -half + std::f64::consts::PI * k as f64 / (N + 1) as f64).collect();
    let mut out = vec![];
    for br in 0..3 {
        let vals: Vec<f64> = ths.iter().map(|&t| triple(t, br)).collect();
        for k in 0..N - 1 {
            if !(vals[k].is_finite() && vals[k + 1].is_finite()) || vals[k].signum() == vals[k + 1].signum() {
                continue;
            }
            let Some(th) = crate::poly::bisect(|t| triple(t, br), ths[k], ths[k + 1], 1e-15) else { continue };
            let Some((p, lam, vc)) = cand(th, br) else { continue };
            if vc.cross(&y.v).norm() < 1e-9 {
                continue;
            }
            let (m, gap, _, _) = closest_approach(&p, &vc, &y.p, &y.v);
            if gap > 1e-7 * s {
                continue;
            }
            let Some((mu, r, oriented)) = oriented_reflection_match(f, &m, &vc, &y.v) else { continue };
            if r > 1e-6 {
                continue;
            }
            out.push(Connection {
                quadrics: vec![lam, mu],
                points: vec![p.iter().copied().collect(), m.iter().copied().collect()],
                oriented,
                residual: r.max(gap),
            });
        }
    }
    Ok(out)
}

/// Vertices and edges of the twelve-plane configuration.
pub const STAR_LINES: [&str; 8] = ["O", "p", "q", "s", "-x", "p1", "q1", "z"];

/// (line a, line b, quadric: 0 = Q_p, 1 = Q_q, 2 = Q_s)
pub const STAR_EDGES: [(usize, usize, usize); 12] = [
    (0, 1, 0),
    (0, 2, 1),
    (0, 3, 2),
    (1, 4, 1),
    (2, 4, 0),
    (1, 5, 2),
    (3, 5, 0),
    (2, 6, 2),
    (3, 6, 1),
    (7, 5, 1),
    (7, 6, 0),
    (4, 7, 2),
];

pub const STAR_FACES: [[usize; 4]; 6] = [[0, 1, 4, 2], [0, 1, 5, 3], [0, 2, 6, 3], [7, 5, 3, 6], [7, 5, 1, 4], [7, 6, 2, 4]];

#[derive(Debug, Clone, Serialize)]
pub struct StarConfiguration {
    pub lines: Vec<Vec<f64>>,
    pub planes: Vec<Hyperplane>,
    pub touching_points: Vec<Vec<f64>>,
    /// per edge: gap between the two lines and reflection-law residual
    pub edge_gaps: Vec<f64>,
    pub edge_law_residuals: Vec<f64>,
    /// plane indices of each triplet (one per line) and quadruplet (one per face)
    pub triplets: Vec<[usize; 3]>,
    pub quadruplets: Vec<[usize; 4]>,
    /// sigma_2 / sigma_1 of the centred touching points of each triplet
    pub triplet_collinearity: Vec<f64>,
    pub quadruplet_pencils: Vec<PencilReport>,
    pub triplet_incidence: Vec<usize>,
    pub quadruplet_incidence: Vec<usize>,
}

impl StarConfiguration {
    pub fn all_pass(&self, tol: f64) -> bool {
        self.triplet_collinearity.iter().all(|r| *r < tol)
            && self.quadruplet_pencils.iter().all(|p| p.ratio < tol)
            && self.edge_gaps.iter().all(|g| *g < tol.sqrt())
            && self.triplet_incidence.iter().all(|c| *c == 2)
            && self.quadruplet_incidence.iter().all(|c| *c == 2)
    }
}

impl AlgebraContext {
    pub fn star_configuration(&self, p: Tag, q: Tag, s: Tag) -> Result<StarConfiguration> {
        let tags = [p, q, s];
        for i in 0..3 {
            for j in (i + 1)..3 {
                if (tags[i].lam - tags[j].lam).abs() < 1e-9 {
                    return Err(Error::DegenerateConfiguration("p, q, s must use distinct quadrics".into()));
                }
            }
        }
        let lines = [
            self.o.clone(),
            self.co_line(p)?,
            self.co_line(q)?,
            self.co_line(s)?,
            self.add_co(p.tau(), q.tau())?,
            self.add_co(p.tau(), s.tau())?,
            self.add_co(q.tau(), s.tau())?,
            self.partial(s, p, q)?,
        ];
        let lam = [p.lam, q.lam, s.lam];
        let f = self.f();
        let mut planes = vec![];
        let mut touching = vec![];
        let mut gaps = vec![];
        let mut laws = vec![];
        for &(a, b, k) in &STAR_EDGES {
            let (la, lb) = (&lines[a], &lines[b]);
            let (m, gap, _, _) = closest_approach(&la.p, &la.v, &lb.p, &lb.v);
            let x = self.snap(lam[k], la, &m)?;
            let n = f.unit_normal(lam[k], &x)?;
            let w = mirror(&la.v, &n);
            laws.push(w.cross(&lb.v).norm());
            gaps.push(gap);
            planes.push(f.tangent_hyperplane(lam[k], &x)?);
            touching.push(x);
        }
        let triplets: Vec<[usize; 3]> = (0..8)
            .map(|v| {
                let e: Vec<usize> = STAR_EDGES.iter().enumerate().filter(|(_, (a, b, _))| *a == v || *b == v).map(|(i, _)| i).collect();
                [e[0], e[1], e[2]]
            })
            .collect();
        let edge_of = |a: usize, b: usize| {
            STAR_EDGES.iter().position(|(x, y, _)| (*x == a && *y == b) || (*x == b && *y == a)).expect("face edge")
        };
        let quadruplets: Vec<[usize; 4]> = STAR_FACES
            .iter()
            .map(|f| [edge_of(f[0], f[1]), edge_of(f[1], f[2]), edge_of(f[2], f[3]), edge_of(f[3], f[0])])
            .collect();
        let triplet_collinearity = triplets
            .iter()
            .map(|t| {
                let c = (&touching[t[0]] + &touching[t[1]] + &touching[t[2]]) / 3.0;
                let m = nalgebra::DMatrix::from_fn(3, 3, |i, j| touching[t[i]][j] - c[j]);
                let sv = m.singular_values();
                let mut sv: Vec<f64> = sv.iter().copied().collect();
                sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
                if sv[0] > 0.0 { sv[1] / sv[0] } else { 0.0 }
            })
            .collect();
        let quadruplet_pencils = quadruplets
            .iter()
            .map(|q| pencil_check(&q.iter().map(|&i| planes[i].clone()).collect::<Vec<_>>(), 1e-9))
            .collect();
        let mut triplet_incidence = vec![0; 12];
        for t in &triplets {
            for &i in t {
                triplet_incidence[i] += 1;
            }
        }
        let mut quadruplet_incidence = vec![0; 12];
        for q in &quadruplets {
            for &i in q {
                quadruplet_incidence[i] += 1;
            }
        }
        Ok(StarConfiguration {
            lines: lines.iter().map(|l| l.p.iter().chain(l.v.iter()).copied().collect()).collect(),
            planes,
            touching_points: touching.iter().map(|x| x.iter().copied().collect()).collect(),
            edge_gaps: gaps,
            edge_law_residuals: laws,
            triplets,
            quadruplets,
            triplet_collinearity,
            quadruplet_pencils,
            triplet_incidence,
            quadruplet_incidence,
        })
    }
}

/// Canonical (unoriented) form of a directed line, for reporting.
pub fn undirected(l: &DirectedLine) -> Line {
    l.line()
}
